#include "hydrosac/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hydrosac/config_io.hpp"
#include "hydrosac/errors.hpp"
#include "hydrosac/trainer.hpp"

namespace hydrosac::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigFile {
  TrainConfig train;
  ArtificialConfig artificial;
  bool has_exploration = false;
  bool has_seed = false;
  bool has_terminal_rule = false;
};

ConfigFile read_config_file(const std::optional<std::string>& path) {
  ConfigFile cf;
  if (!path) return cf;
  std::ifstream in(*path);
  if (!in) throw UsageError("cannot open config file " + *path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + *path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "train" && key != "env" && key != "agent" && key != "artificial") {
      throw UsageError("unknown config section '" + key + "'");
    }
  }
  try {
    if (j.contains("train")) {
      merge_json(cf.train, j["train"]);
      cf.has_exploration = j["train"].contains("exploration_weeks");
      cf.has_seed = j["train"].contains("seed");
    }
    if (j.contains("env")) {
      merge_json(cf.train.env, j["env"]);
      cf.has_terminal_rule = j["env"].contains("terminal_price_rule");
    }
    if (j.contains("agent")) merge_json(cf.train.agent, j["agent"]);
    if (j.contains("artificial")) merge_json(cf.artificial, j["artificial"]);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cf;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("HYDROSAC_SEED")) {
    try {
      std::size_t used = 0;
      auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("HYDROSAC_SEED must be a non-negative integer");
  }
  return 0;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

template <typename T>
void apply(std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

struct ArtificialFlags {
  std::optional<double> annual_inflow, price_noise, inflow_noise;
  std::optional<int> samples_per_week;
  bool synthetic_historic = false;

  void add_to(CLI::App* app) {
    app->add_option("--annual-inflow", annual_inflow, "Mean yearly inflow in Mm3 (synthetic pools)");
    app->add_option("--samples-per-week", samples_per_week, "Synthetic samples per weekly pool");
    app->add_option("--price-noise", price_noise, "Multiplicative price noise half-width");
    app->add_option("--inflow-noise", inflow_noise, "Multiplicative inflow noise half-width");
    app->add_flag("--synthetic-historic", synthetic_historic,
                  "Generate historic-like synthetic pools (wide noise) instead of reading data");
  }

  ArtificialConfig resolve(ArtificialConfig cfg, std::optional<double> reservoir) const {
    if (synthetic_historic) cfg = synthetic_historic_defaults(cfg);
    if (reservoir) cfg.r_max = *reservoir;
    if (annual_inflow) cfg.annual_inflow = *annual_inflow;
    if (samples_per_week) cfg.samples_per_week = *samples_per_week;
    if (price_noise) cfg.price_noise = *price_noise;
    if (inflow_noise) cfg.inflow_noise = *inflow_noise;
    return cfg;
  }
};

struct EnvFlags {
  std::optional<double> r_max, f_max, k_price, q_price;
  std::optional<std::string> terminal_rule;

  void add_to(CLI::App* app) {
    app->add_option("--r-max", r_max, "Reservoir capacity in Mm3");
    app->add_option("--f-max", f_max, "Maximum weekly release as a fraction of capacity");
    app->add_option("--k-price", k_price, "Price scaling factor");
    app->add_option("--q-price", q_price, "Price exponent");
    app->add_option("--terminal-rule", terminal_rule, "End-of-year water value: last_week_price | max_price")
        ->check(CLI::IsMember({"last_week_price", "max_price"}));
  }

  [[nodiscard]] bool any() const { return r_max || f_max || k_price || q_price || terminal_rule; }

  void apply_to(EnvConfig& env) const {
    if (r_max) env.r_max = *r_max;
    if (f_max) env.f_max = *f_max;
    if (k_price) env.k_price = *k_price;
    if (q_price) env.q_price = *q_price;
    if (terminal_rule) env.terminal_price_rule = terminal_rule_from_string(*terminal_rule);
  }
};

double tail_mean(const std::vector<EpisodeRecord>& log, double fraction) {
  if (log.empty()) return 0.0;
  auto n = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(log.size()) * fraction));
  double sum = 0.0;
  for (auto it = log.end() - static_cast<std::ptrdiff_t>(n); it != log.end(); ++it) sum += it->total_reward;
  return sum / static_cast<double>(n);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Soft actor-critic scheduling of a single hydropower reservoir", "hydrosac"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  app.add_option("--config", config_path, "JSON config file (sections: train, env, agent, artificial)")
      ->check(CLI::ExistingFile);
  app.fallthrough();

  // gen-scenarios
  auto* gen = app.add_subcommand("gen-scenarios", "Build weekly price/inflow pools");
  std::string gen_mode = "artificial";
  std::string gen_out;
  std::optional<std::uint64_t> gen_seed;
  std::vector<std::string> price_files, inflow_files;
  std::optional<double> gen_r_max;
  ArtificialFlags gen_art;
  gen->add_option("--mode", gen_mode, "artificial | historic")->check(CLI::IsMember({"artificial", "historic"}));
  gen->add_option("--out", gen_out, "Pools JSON to write")->required();
  gen->add_option("--seed", gen_seed, "Generator seed (default: $HYDROSAC_SEED or 0)");
  gen->add_option("--prices", price_files, "Price CSV files (year,week,value)")->check(CLI::ExistingFile);
  gen->add_option("--inflows", inflow_files, "Inflow CSV files (year,week,value)")->check(CLI::ExistingFile);
  gen->add_option("--r-max", gen_r_max, "Reservoir capacity in Mm3 used to normalize inflows");
  gen_art.add_to(gen);

  // train
  auto* tr = app.add_subcommand("train", "Train an agent and write a checkpoint plus episode log");
  std::optional<std::string> tr_pools;
  std::string tr_out, tr_log;
  std::optional<std::int64_t> tr_total, tr_explore;
  std::optional<int> tr_batch, tr_ckpt_every, tr_hidden;
  std::optional<std::uint64_t> tr_seed;
  std::optional<double> tr_alpha;
  bool tr_include_replay = false, tr_timing = false;
  EnvFlags tr_env;
  ArtificialFlags tr_art;
  tr->add_option("--pools", tr_pools, "Pools JSON (default: synthetic artificial pools)")->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "Checkpoint JSON to write")->required();
  tr->add_option("--log", tr_log, "Episode log CSV to write")->required();
  tr->add_option("--total-weeks", tr_total, "Environment steps to train (default 300000)");
  tr->add_option("--exploration-weeks", tr_explore, "Random-action steps before learning starts");
  tr->add_option("--batch-size", tr_batch, "Replay batch size (default 100)");
  tr->add_option("--seed", tr_seed, "Training seed (default: $HYDROSAC_SEED or 0)");
  tr->add_option("--alpha", tr_alpha, "Entropy temperature");
  tr->add_option("--hidden", tr_hidden, "Neurons per hidden layer (default 100)");
  tr->add_option("--checkpoint-every", tr_ckpt_every, "Rewrite the checkpoint every N episodes");
  tr->add_flag("--include-replay", tr_include_replay, "Store replay memory in the checkpoint");
  tr->add_flag("--log-timing", tr_timing, "Fill the seconds column with wall-clock time");
  tr_env.add_to(tr);
  tr_art.add_to(tr);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Roll out a trained agent on sampled scenarios");
  std::string ev_ckpt, ev_pools, ev_out;
  int ev_episodes = 5;
  bool ev_det = false;
  std::optional<std::uint64_t> ev_seed;
  EnvFlags ev_env;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--pools", ev_pools, "Pools JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "Trace CSV to write")->required();
  ev->add_option("--episodes", ev_episodes, "Number of scenarios")->check(CLI::PositiveNumber);
  ev->add_flag("--deterministic", ev_det, "Use the mean action instead of sampling");
  ev->add_option("--seed", ev_seed, "Scenario seed (default: $HYDROSAC_SEED or 0)");
  ev_env.add_to(ev);

  // plan
  auto* pl = app.add_subcommand("plan", "Deterministic 52-week release plan for one scenario");
  std::string pl_ckpt, pl_out;
  std::optional<std::string> pl_scenario, pl_pools;
  std::optional<std::uint64_t> pl_seed;
  std::optional<double> pl_storage;
  pl->add_option("--checkpoint", pl_ckpt, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  auto* scen_opt = pl->add_option("--scenario", pl_scenario, "Scenario CSV (week,price,inflow)")
                       ->check(CLI::ExistingFile);
  auto* pools_opt = pl->add_option("--pools", pl_pools, "Pools JSON to sample a scenario from")
                        ->check(CLI::ExistingFile);
  scen_opt->excludes(pools_opt);
  pl->add_option("--seed", pl_seed, "Scenario seed when sampling from pools");
  pl->add_option("--initial-storage", pl_storage, "Initial storage fraction (default: mid initial window)");
  pl->add_option("--out", pl_out, "Plan CSV to write")->required();

  // inspect
  auto* in = app.add_subcommand("inspect", "Summarize a checkpoint");
  std::string in_ckpt;
  bool in_json = false;
  in->add_option("--checkpoint", in_ckpt, "Checkpoint JSON")->required();
  in->add_flag("--json", in_json, "Machine-readable output");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    const ConfigFile cf = read_config_file(config_path);

    if (gen->parsed()) {
      const std::uint64_t seed = gen_seed ? *gen_seed : default_seed();
      ScenarioPools pools;
      if (gen_mode == "artificial" || gen_art.synthetic_historic) {
        const PoolMode mode = gen_mode == "artificial" ? PoolMode::artificial : PoolMode::historic;
        ArtificialConfig acfg = gen_art.resolve(cf.artificial, gen_r_max);
        if (mode == PoolMode::historic && !gen_art.synthetic_historic) acfg = synthetic_historic_defaults(acfg);
        pools = generate_artificial_pools(acfg, seed, mode);
      } else {
        if (price_files.empty() || inflow_files.empty()) {
          throw UsageError("historic mode requires --prices FILE... and --inflows FILE... (or --synthetic-historic)");
        }
        std::vector<RawSeries> prices, inflows;
        for (const auto& f : price_files) prices.push_back(load_csv_series(f, SeriesKind::price));
        for (const auto& f : inflow_files) inflows.push_back(load_csv_series(f, SeriesKind::inflow));
        pools = build_pools(prices, inflows, gen_r_max.value_or(cf.artificial.r_max));
      }
      save_pools(pools, gen_out);
      out << "mode: " << to_string(pools.mode) << "\nprovenance: " << pools.provenance << "\nweek,prices,inflows\n";
      for (int w = 0; w < kWeeksPerYear; ++w) {
        out << (w + 1) << ',' << pools.price_pool[w].size() << ',' << pools.inflow_pool[w].size() << '\n';
      }
      return kSuccess;
    }

    if (tr->parsed()) {
      TrainConfig cfg = cf.train;
      if (tr_seed) {
        cfg.seed = *tr_seed;
      } else if (!cf.has_seed) {
        cfg.seed = default_seed();
      }
      ScenarioPools pools;
      if (tr_pools) {
        pools = load_pools(*tr_pools);
        cfg.pools_path = *tr_pools;
      } else {
        ArtificialConfig acfg = tr_art.resolve(cf.artificial, tr_env.r_max ? tr_env.r_max : std::optional<double>(cfg.env.r_max));
        const PoolMode mode = tr_art.synthetic_historic ? PoolMode::historic : PoolMode::artificial;
        pools = generate_artificial_pools(acfg, cfg.seed, mode);
        cfg.pools_path = "";
      }
      const bool historic = pools.mode == PoolMode::historic;
      if (!cf.has_terminal_rule) {
        cfg.env.terminal_price_rule = historic ? TerminalPriceRule::max_price : TerminalPriceRule::last_week_price;
      }
      tr_env.apply_to(cfg.env);
      apply(tr_total, cfg.total_weeks);
      apply(tr_batch, cfg.batch_size);
      apply(tr_ckpt_every, cfg.checkpoint_every_episodes);
      apply(tr_alpha, cfg.agent.alpha);
      apply(tr_hidden, cfg.agent.hidden);
      if (tr_include_replay) cfg.include_replay = true;
      if (tr_explore) {
        cfg.exploration_weeks = *tr_explore;
      } else if (!cf.has_exploration) {
        cfg.exploration_weeks = std::min<std::int64_t>(historic ? 50000 : 10000, cfg.total_weeks);
      }
      try {
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }

      TrainHooks hooks;
      hooks.measure_wall_clock = tr_timing;
      hooks.on_checkpoint = [&](const Checkpoint& ck) { save_checkpoint(ck, tr_out); };
      TrainResult result;
      try {
        result = train(cfg, pools, hooks);
      } catch (const TrainingAborted& e) {
        write_text(tr_log, training_log_csv(e.partial_log));
        err << "error: " << e.what() << '\n';
        return kTrainingAborted;
      }
      save_checkpoint(result.checkpoint, tr_out);
      write_text(tr_log, training_log_csv(result.log));
      out << "episodes: " << result.log.size() << "\nsteps: " << result.checkpoint.global_step
          << "\nfinal_10pct_mean_reward: " << format_double(tail_mean(result.log, 0.1)) << '\n';
      return kSuccess;
    }

    if (ev->parsed()) {
      Checkpoint ck = load_checkpoint(ev_ckpt);
      const ScenarioPools pools = load_pools(ev_pools);
      if (ev_env.any()) {
        EnvConfig requested = ck.config.env;
        ev_env.apply_to(requested);
        std::vector<std::string> warnings;
        ck.config.env = resolve_env_config(ck.config.env, requested, warnings);
        for (const auto& w : warnings) err << "warning: " << w << '\n';
      }
      const EvalReport report = evaluate(ck, pools, ev_episodes, ev_det, ev_seed ? *ev_seed : default_seed());
      write_text(ev_out, trace_csv(report));
      const double mean = std::accumulate(report.total_rewards.begin(), report.total_rewards.end(), 0.0) /
                          static_cast<double>(report.total_rewards.size());
      out << "episodes: " << report.total_rewards.size() << "\nmode: " << (ev_det ? "deterministic" : "stochastic")
          << "\nmean_total_reward: " << format_double(mean) << '\n';
      return kSuccess;
    }

    if (pl->parsed()) {
      const Checkpoint ck = load_checkpoint(pl_ckpt);
      Scenario scenario;
      if (pl_scenario) {
        scenario = load_scenario_csv(*pl_scenario);
      } else if (pl_pools) {
        Rng rng = derive_rng(pl_seed ? *pl_seed : default_seed(), 0, 0);
        scenario = sample_scenario(load_pools(*pl_pools), rng);
      } else {
        throw UsageError("plan needs --scenario FILE or --pools FILE");
      }
      const double storage = pl_storage.value_or(0.5 * (ck.config.env.init_low + ck.config.env.init_high));
      const auto rows = plan(ck, scenario, storage);
      write_text(pl_out, plan_csv(rows));
      double total = 0.0;
      for (const auto& r : rows) total += r.reward;
      out << "weeks: " << rows.size() << "\ntotal_reward: " << format_double(total) << '\n';
      return kSuccess;
    }

    if (in->parsed()) {
      const Checkpoint ck = load_checkpoint(in_ckpt);
      const SacAgent& a = ck.agent;
      const std::vector<std::pair<std::string, const Mlp*>> nets{
          {"policy_trunk", &a.policy.trunk()}, {"policy_head", &a.policy.head()}, {"q1", &a.q1},
          {"q2", &a.q2}, {"value", &a.value}, {"value_target", &a.value_target}};
      if (in_json) {
        nlohmann::json j;
        j["version"] = ck.version;
        j["episode"] = ck.episode;
        j["global_step"] = ck.global_step;
        j["replay_size"] = a.replay.size();
        j["config"] = to_json(ck.config, false);
        for (const auto& [name, net] : nets) j["networks"][name] = net->widths();
        out << j.dump(2) << '\n';
      } else {
        out << "version: " << ck.version << "\nepisode: " << ck.episode << "\nglobal_step: " << ck.global_step
            << "\nreplay_size: " << a.replay.size() << "\nnetworks:\n";
        for (const auto& [name, net] : nets) {
          out << "  " << name << ": [";
          auto w = net->widths();
          for (std::size_t i = 0; i < w.size(); ++i) out << (i ? "," : "") << w[i];
          out << "]\n";
        }
        out << "config:\n" << to_json(ck.config, false).dump(2) << '\n';
      }
      return kSuccess;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const CorruptArtifact& e) {
    err << "corrupt artifact: " << e.what() << '\n';
    return kCorruptArtifact;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace hydrosac::cli
