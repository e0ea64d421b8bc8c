#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hydrosac/random.hpp"

namespace hydrosac {

inline constexpr int kWeeksPerYear = 52;

enum class SeriesKind { price, inflow };
enum class PoolMode { artificial, historic };

std::string to_string(SeriesKind kind);
std::string to_string(PoolMode mode);
PoolMode pool_mode_from_string(const std::string& text);

struct SeriesPoint {
  int year = 0;
  int week = 0;  // 1..52
  double value = 0.0;
};

/// One raw weekly series as read from disk: prices in currency/MWh or inflows in Mm3/week.
struct RawSeries {
  SeriesKind kind = SeriesKind::price;
  std::vector<SeriesPoint> points;
  std::string label;
};

/// Per-week empirical pools of normalized samples. Index 0 holds week 1.
struct ScenarioPools {
  std::array<std::vector<double>, kWeeksPerYear> price_pool;
  std::array<std::vector<double>, kWeeksPerYear> inflow_pool;
  double price_max = 1.0;
  PoolMode mode = PoolMode::artificial;
  std::string provenance;

  /// Throws DataError if any pool is empty or holds a value outside [0,1].
  void validate() const;
};

/// One bootstrapped year; index 0 is week 1.
struct Scenario {
  std::array<double, kWeeksPerYear> prices{};
  std::array<double, kWeeksPerYear> inflows{};
};

/// Shape of the synthetic training data. The price profile is piecewise constant
/// (high in weeks 1..high_until_week and high_from_week..52, low in between); the
/// inflow profile is a base flow plus a Gaussian snow-melt bump.
struct ArtificialConfig {
  int samples_per_week = 100;
  double r_max = 1000.0;          // Mm3
  double annual_inflow = 1000.0;  // Mm3/year
  double high_price = 1.0;
  double low_price = 0.35;
  int high_until_week = 15;
  int high_from_week = 40;
  double base_flow_share = 0.2;
  double bump_center_week = 24.0;
  double bump_width_weeks = 4.0;
  double price_noise = 0.1;   // multiplicative, factor ~ U[1-n, 1+n]
  double inflow_noise = 0.2;  // multiplicative, factor ~ U[1-n, 1+n]

  void validate() const;

  /// Noise-free profiles, before the price renormalization step.
  [[nodiscard]] double price_level(int week) const;
  [[nodiscard]] double inflow_fraction(int week) const;
};

/// Noise widths used for the synthetic stand-in of historic data.
ArtificialConfig synthetic_historic_defaults(ArtificialConfig base = {});

/// Reads a `year,week,value` CSV. Errors carry the 1-based line number (header is line 1).
RawSeries load_csv_series(const std::filesystem::path& path, SeriesKind kind);
RawSeries parse_csv_series(const std::string& text, SeriesKind kind, const std::string& label);

ScenarioPools build_pools(std::span<const RawSeries> price_series,
                          std::span<const RawSeries> inflow_series, double r_max);

ScenarioPools generate_artificial_pools(const ArtificialConfig& cfg, std::uint64_t seed,
                                        PoolMode mode = PoolMode::artificial);

Scenario sample_scenario(const ScenarioPools& pools, Rng& rng);

void save_pools(const ScenarioPools& pools, const std::filesystem::path& path);
ScenarioPools load_pools(const std::filesystem::path& path);
std::string pools_to_json(const ScenarioPools& pools);
ScenarioPools pools_from_json(const std::string& text);

/// Reads a `week,price,inflow` CSV of normalized values (exactly 52 rows).
Scenario load_scenario_csv(const std::filesystem::path& path);
Scenario parse_scenario_csv(const std::string& text);

}  // namespace hydrosac
