#pragma once

#include <stdexcept>
#include <string>

namespace hydrosac {

/// Input data that violates a documented format or invariant (CSV rows, pool files, scenarios).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A checkpoint or pools file that cannot be parsed or fails shape/version validation.
class CorruptArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hydrosac
