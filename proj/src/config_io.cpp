#include "hydrosac/config_io.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>

#include "hydrosac/trainer.hpp"

namespace hydrosac {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format double");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  return v;
}

double json_to_double(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>());
  throw std::invalid_argument("expected a number");
}

namespace {

// Visits every serializable field as (name, reference).
template <typename Cfg, typename F>
void visit(Cfg& c, F&& f) {
  using T = std::remove_const_t<Cfg>;
  if constexpr (std::is_same_v<T, EnvConfig>) {
    f("r_max", c.r_max);
    f("f_max", c.f_max);
    f("k_price", c.k_price);
    f("q_price", c.q_price);
    f("init_low", c.init_low);
    f("init_high", c.init_high);
    f("terminal_low", c.terminal_low);
    f("terminal_high", c.terminal_high);
    f("terminal_price_rule", c.terminal_price_rule);
  } else if constexpr (std::is_same_v<T, SacConfig>) {
    f("hidden", c.hidden);
    f("init_bound", c.init_bound);
    f("gamma", c.gamma);
    f("tau", c.tau);
    f("alpha", c.alpha);
    f("lr_value", c.lr_value);
    f("lr_q", c.lr_q);
    f("lr_policy", c.lr_policy);
    f("log_std_min", c.log_std_min);
    f("log_std_max", c.log_std_max);
    f("log_prob_floor", c.log_prob_floor);
    f("rms_decay", c.rms_decay);
    f("rms_epsilon", c.rms_epsilon);
  } else if constexpr (std::is_same_v<T, ArtificialConfig>) {
    f("samples_per_week", c.samples_per_week);
    f("r_max", c.r_max);
    f("annual_inflow", c.annual_inflow);
    f("high_price", c.high_price);
    f("low_price", c.low_price);
    f("high_until_week", c.high_until_week);
    f("high_from_week", c.high_from_week);
    f("base_flow_share", c.base_flow_share);
    f("bump_center_week", c.bump_center_week);
    f("bump_width_weeks", c.bump_width_weeks);
    f("price_noise", c.price_noise);
    f("inflow_noise", c.inflow_noise);
  } else if constexpr (std::is_same_v<T, TrainConfig>) {
    f("total_weeks", c.total_weeks);
    f("exploration_weeks", c.exploration_weeks);
    f("batch_size", c.batch_size);
    f("seed", c.seed);
    f("checkpoint_every_episodes", c.checkpoint_every_episodes);
    f("include_replay", c.include_replay);
    f("pools_path", c.pools_path);
  }
}

template <typename Cfg>
nlohmann::json write_fields(const Cfg& cfg, bool exact) {
  nlohmann::json j = nlohmann::json::object();
  visit(cfg, [&](const char* name, const auto& v) {
    using V = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<V, double>) {
      j[name] = exact ? nlohmann::json(format_double(v)) : nlohmann::json(v);
    } else if constexpr (std::is_same_v<V, TerminalPriceRule>) {
      j[name] = to_string(v);
    } else {
      j[name] = v;
    }
  });
  return j;
}

template <typename Cfg>
void read_fields(Cfg& cfg, const nlohmann::json& j, const char* section, std::set<std::string> nested = {}) {
  if (!j.is_object()) throw std::invalid_argument(std::string("config section '") + section + "' must be an object");
  std::set<std::string> known = std::move(nested);
  visit(cfg, [&](const char* name, auto& v) {
    known.insert(name);
    auto it = j.find(name);
    if (it == j.end()) return;
    using V = std::decay_t<decltype(v)>;
    try {
      if constexpr (std::is_same_v<V, double>) {
        v = json_to_double(*it);
      } else if constexpr (std::is_same_v<V, TerminalPriceRule>) {
        v = terminal_rule_from_string(it->template get<std::string>());
      } else if constexpr (std::is_same_v<V, bool>) {
        if (!it->is_boolean()) throw std::invalid_argument("expected a boolean");
        v = it->template get<bool>();
      } else if constexpr (std::is_same_v<V, std::string>) {
        v = it->template get<std::string>();
      } else {
        if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
        if (std::is_unsigned_v<V> && !it->is_number_unsigned()) {
          throw std::invalid_argument("expected a non-negative integer");
        }
        v = it->template get<V>();
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("config key '") + section + "." + name + "': " + e.what());
    }
  });
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument(std::string("unknown config key '") + section + "." + key + "'");
  }
}

}  // namespace

nlohmann::json to_json(const EnvConfig& cfg, bool exact) { return write_fields(cfg, exact); }
nlohmann::json to_json(const SacConfig& cfg, bool exact) { return write_fields(cfg, exact); }
nlohmann::json to_json(const ArtificialConfig& cfg, bool exact) { return write_fields(cfg, exact); }

nlohmann::json to_json(const TrainConfig& cfg, bool exact) {
  nlohmann::json j = write_fields(cfg, exact);
  j["env"] = to_json(cfg.env, exact);
  j["agent"] = to_json(cfg.agent, exact);
  return j;
}

void merge_json(EnvConfig& cfg, const nlohmann::json& j) { read_fields(cfg, j, "env"); }
void merge_json(SacConfig& cfg, const nlohmann::json& j) { read_fields(cfg, j, "agent"); }
void merge_json(ArtificialConfig& cfg, const nlohmann::json& j) { read_fields(cfg, j, "artificial"); }

void merge_json(TrainConfig& cfg, const nlohmann::json& j) {
  read_fields(cfg, j, "train", {"env", "agent"});
  if (auto it = j.find("env"); it != j.end()) merge_json(cfg.env, *it);
  if (auto it = j.find("agent"); it != j.end()) merge_json(cfg.agent, *it);
}

}  // namespace hydrosac
