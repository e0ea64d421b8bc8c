#pragma once

#include <array>

#include "hydrosac/random.hpp"
#include "hydrosac/scenario.hpp"

namespace hydrosac {

enum class TerminalPriceRule { last_week_price, max_price };

std::string to_string(TerminalPriceRule rule);
TerminalPriceRule terminal_rule_from_string(const std::string& text);

struct EnvConfig {
  double r_max = 1000.0;  // Mm3
  double f_max = 0.03;    // max weekly release as a fraction of r_max
  double k_price = 1.0;
  double q_price = 1.0;
  double init_low = 0.4;
  double init_high = 0.6;
  double terminal_low = 0.4;
  double terminal_high = 0.6;
  TerminalPriceRule terminal_price_rule = TerminalPriceRule::last_week_price;

  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

/// Reservoir state at the start of a week. Storage and inflow are fractions of r_max.
struct EnvState {
  int week = 1;
  double storage = 0.0;
  double price = 0.0;
  double inflow = 0.0;
  double weeks_to_empty = 0.0;
};

struct StepOutcome {
  EnvState next_state;  // meaningful only when !done
  double reward = 0.0;  // includes terminal_bonus on the last week
  bool done = false;
  double spill = 0.0;
  double effective_action = 0.0;
  double end_storage = 0.0;
  double terminal_bonus = 0.0;
};

inline constexpr std::size_t kObsSize = 5;
using Observation = std::array<double, kObsSize>;

EnvState make_state(int week, double storage, const Scenario& scenario, const EnvConfig& cfg);

/// Week 1 with storage drawn uniformly from [init_low, init_high].
EnvState reset(const EnvConfig& cfg, const Scenario& scenario, Rng& rng);

/// Largest action whose release does not exceed the water currently stored.
double feasible_max_action(const EnvState& state, const EnvConfig& cfg);

/// R = a * f_max * r_max * (y * k_price)^q_price
double reward(double effective_action, double price, const EnvConfig& cfg);

/// Value of water left at the end of the year; zero outside [terminal_low, terminal_high].
double terminal_value(double end_storage, double terminal_price, const EnvConfig& cfg);

/// Release is bounded by pre-inflow storage, inflow is added afterwards, and anything
/// above capacity spills.
StepOutcome step(const EnvState& state, double action, const Scenario& scenario, const EnvConfig& cfg);

/// [week/52, storage, price, inflow, min(weeks_to_empty, 52)/52]
Observation observe(const EnvState& state);

}  // namespace hydrosac
