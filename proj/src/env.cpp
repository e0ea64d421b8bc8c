#include "hydrosac/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hydrosac {

std::string to_string(TerminalPriceRule rule) {
  return rule == TerminalPriceRule::last_week_price ? "last_week_price" : "max_price";
}

TerminalPriceRule terminal_rule_from_string(const std::string& text) {
  if (text == "last_week_price") return TerminalPriceRule::last_week_price;
  if (text == "max_price") return TerminalPriceRule::max_price;
  throw std::invalid_argument("unknown terminal price rule '" + text + "'");
}

void EnvConfig::validate() const {
  if (!(r_max > 0.0)) throw std::invalid_argument("r_max must be > 0");
  if (!(f_max > 0.0 && f_max <= 1.0)) throw std::invalid_argument("f_max must be in (0,1]");
  if (!(q_price > 0.0)) throw std::invalid_argument("q_price must be > 0");
  if (!(k_price >= 0.0)) throw std::invalid_argument("k_price must be >= 0");
  if (!(init_low >= 0.0 && init_low <= init_high && init_high <= 1.0)) {
    throw std::invalid_argument("initial storage bounds must satisfy 0 <= low <= high <= 1");
  }
  if (!(terminal_low >= 0.0 && terminal_low <= terminal_high && terminal_high <= 1.0)) {
    throw std::invalid_argument("terminal window must satisfy 0 <= low <= high <= 1");
  }
}

EnvState make_state(int week, double storage, const Scenario& scenario, const EnvConfig& cfg) {
  if (week < 1 || week > kWeeksPerYear) throw std::out_of_range("week outside 1..52");
  EnvState s;
  s.week = week;
  s.storage = storage;
  s.price = scenario.prices[week - 1];
  s.inflow = scenario.inflows[week - 1];
  s.weeks_to_empty = storage / cfg.f_max;
  return s;
}

EnvState reset(const EnvConfig& cfg, const Scenario& scenario, Rng& rng) {
  double storage = cfg.init_low == cfg.init_high ? cfg.init_low : uniform(rng, cfg.init_low, cfg.init_high);
  return make_state(1, storage, scenario, cfg);
}

double feasible_max_action(const EnvState& state, const EnvConfig& cfg) {
  return std::min(1.0, state.storage / cfg.f_max);
}

double reward(double effective_action, double price, const EnvConfig& cfg) {
  return effective_action * cfg.f_max * cfg.r_max * std::pow(price * cfg.k_price, cfg.q_price);
}

double terminal_value(double end_storage, double terminal_price, const EnvConfig& cfg) {
  if (end_storage < cfg.terminal_low || end_storage > cfg.terminal_high) return 0.0;
  return end_storage * cfg.r_max * std::pow(terminal_price * cfg.k_price, cfg.q_price);
}

StepOutcome step(const EnvState& state, double action, const Scenario& scenario, const EnvConfig& cfg) {
  if (!(action >= 0.0 && action <= 1.0)) throw std::invalid_argument("action outside [0,1]");
  if (state.week < 1 || state.week > kWeeksPerYear) throw std::out_of_range("week outside 1..52");

  StepOutcome out;
  out.effective_action = std::min(action, feasible_max_action(state, cfg));
  out.reward = reward(out.effective_action, state.price, cfg);
  double raw_end = state.storage - out.effective_action * cfg.f_max + state.inflow;
  out.spill = std::max(0.0, raw_end - 1.0);
  out.end_storage = std::clamp(raw_end, 0.0, 1.0);

  if (state.week == kWeeksPerYear) {
    out.done = true;
    double terminal_price =
        cfg.terminal_price_rule == TerminalPriceRule::last_week_price ? state.price : 1.0;
    out.terminal_bonus = terminal_value(out.end_storage, terminal_price, cfg);
    out.reward += out.terminal_bonus;
    out.next_state = state;
    out.next_state.storage = out.end_storage;
    out.next_state.weeks_to_empty = out.end_storage / cfg.f_max;
  } else {
    out.next_state = make_state(state.week + 1, out.end_storage, scenario, cfg);
  }
  return out;
}

Observation observe(const EnvState& state) {
  return {static_cast<double>(state.week) / kWeeksPerYear, state.storage, state.price, state.inflow,
          std::min(state.weeks_to_empty, static_cast<double>(kWeeksPerYear)) / kWeeksPerYear};
}

}  // namespace hydrosac
