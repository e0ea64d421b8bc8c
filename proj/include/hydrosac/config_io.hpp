#pragma once

#include <string>

#include "json.hpp"

#include "hydrosac/env.hpp"
#include "hydrosac/sac.hpp"
#include "hydrosac/scenario.hpp"

namespace hydrosac {

struct TrainConfig;

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
double parse_double(const std::string& text);

/// Reads a double stored either as a JSON number or as a decimal string.
double json_to_double(const nlohmann::json& j);

// Writers emit doubles as decimal strings when `exact` is set (checkpoints), else as
// JSON numbers. Readers accept both and reject unknown keys.
nlohmann::json to_json(const EnvConfig& cfg, bool exact);
nlohmann::json to_json(const SacConfig& cfg, bool exact);
nlohmann::json to_json(const ArtificialConfig& cfg, bool exact);
nlohmann::json to_json(const TrainConfig& cfg, bool exact);

void merge_json(EnvConfig& cfg, const nlohmann::json& j);
void merge_json(SacConfig& cfg, const nlohmann::json& j);
void merge_json(ArtificialConfig& cfg, const nlohmann::json& j);
/// Top-level train keys plus nested "env" and "agent" objects.
void merge_json(TrainConfig& cfg, const nlohmann::json& j);

}  // namespace hydrosac
