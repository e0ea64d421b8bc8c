#include "hydrosac/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <sstream>

#include "hydrosac/config_io.hpp"

namespace hydrosac {

void TrainConfig::validate() const {
  if (total_weeks < 0) throw std::invalid_argument("total_weeks must be >= 0");
  if (exploration_weeks < 0 || exploration_weeks > total_weeks) {
    throw std::invalid_argument("exploration_weeks must be in [0, total_weeks]");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (checkpoint_every_episodes < 0) throw std::invalid_argument("checkpoint_every_episodes must be >= 0");
  env.validate();
  agent.validate();
}

TrainingAborted::TrainingAborted(const NonFiniteLoss& cause, std::int64_t at_step,
                                 std::vector<EpisodeRecord> partial)
    : std::runtime_error("training aborted at step " + std::to_string(at_step) + ": " + cause.what()),
      report(cause.report),
      step(at_step),
      partial_log(std::move(partial)) {}

TrainResult train(const TrainConfig& cfg, const ScenarioPools& pools, const TrainHooks& hooks) {
  cfg.validate();
  pools.validate();
  using clock = std::chrono::steady_clock;

  Rng rng(cfg.seed);
  TrainResult result;
  Checkpoint& ck = result.checkpoint;
  ck.config = cfg;
  ck.agent = SacAgent(cfg.agent, rng);
  ck.agent.replay.reserve(static_cast<std::size_t>(cfg.total_weeks));

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::int64_t step_count = 0;
  while (step_count < cfg.total_weeks) {
    const auto started = clock::now();
    const Scenario scenario = sample_scenario(pools, rng);
    EnvState state = reset(cfg.env, scenario, rng);
    EpisodeRecord rec;
    double action_sum = 0.0;
    bool finished = false;
    while (!finished && step_count < cfg.total_weeks) {
      const Observation obs = observe(state);
      const bool exploring = step_count < cfg.exploration_weeks;
      const double action =
          ck.agent.select_action(obs, exploring ? ActionMode::explore_random : ActionMode::stochastic, rng);
      const StepOutcome out = step(state, action, scenario, cfg.env);
      ck.agent.replay.push({obs, action, out.reward, observe(out.next_state), out.done});
      ++step_count;

      if (!exploring && ck.agent.replay.size() >= batch) {
        try {
          ck.agent.update(ck.agent.replay.sample(batch, rng), rng);
        } catch (const NonFiniteLoss& e) {
          throw TrainingAborted(e, step_count, std::move(result.log));
        }
      }

      rec.total_reward += out.reward;
      rec.total_spill += out.spill;
      action_sum += out.effective_action;
      if (out.done) {
        rec.terminal_bonus = out.terminal_bonus;
        rec.end_storage = out.end_storage;
        finished = true;
      } else {
        state = out.next_state;
      }
    }
    if (!finished) break;

    rec.episode = ck.episode++;
    rec.mean_action = action_sum / kWeeksPerYear;
    if (hooks.measure_wall_clock) {
      rec.seconds = std::chrono::duration<double>(clock::now() - started).count();
    }
    result.log.push_back(rec);
    if (hooks.on_episode) hooks.on_episode(rec);
    if (hooks.on_checkpoint && cfg.checkpoint_every_episodes > 0 &&
        ck.episode % cfg.checkpoint_every_episodes == 0) {
      ck.rng_state = rng_state_to_string(rng);
      ck.global_step = step_count;
      ck.replay_included = cfg.include_replay;
      hooks.on_checkpoint(ck);
    }
  }
  ck.rng_state = rng_state_to_string(rng);
  ck.global_step = step_count;
  ck.replay_included = cfg.include_replay;
  return result;
}

EvalReport evaluate_policy(const PolicyFn& policy, const ScenarioPools& pools, const EnvConfig& env,
                           int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  env.validate();
  EvalReport report;
  for (int ep = 0; ep < n_episodes; ++ep) {
    Rng scenario_rng = derive_rng(seed, static_cast<std::uint64_t>(ep), 0);
    Rng action_rng = derive_rng(seed, static_cast<std::uint64_t>(ep), 1);
    const Scenario scenario = sample_scenario(pools, scenario_rng);
    EnvState state = reset(env, scenario, scenario_rng);
    std::vector<TraceRow> trace;
    trace.reserve(kWeeksPerYear);
    double accumulated = 0.0;
    while (true) {
      const double action = std::clamp(policy(observe(state), action_rng), 0.0, 1.0);
      const StepOutcome out = step(state, action, scenario, env);
      accumulated += out.reward;
      trace.push_back({ep, state.week, state.price, state.inflow, out.effective_action, out.end_storage,
                       out.spill, out.reward, accumulated});
      if (out.done) {
        report.end_storages.push_back(out.end_storage);
        break;
      }
      state = out.next_state;
    }
    report.total_rewards.push_back(accumulated);
    report.traces.push_back(std::move(trace));
  }
  return report;
}

EvalReport evaluate(const Checkpoint& ckpt, const ScenarioPools& pools, int n_episodes, bool deterministic,
                    std::uint64_t seed) {
  const SacAgent& agent = ckpt.agent;
  const ActionMode mode = deterministic ? ActionMode::deterministic : ActionMode::stochastic;
  return evaluate_policy([&](const Observation& obs, Rng& rng) { return agent.select_action(obs, mode, rng); },
                         pools, ckpt.config.env, n_episodes, seed);
}

std::vector<PlanRow> plan(const Checkpoint& ckpt, const Scenario& scenario, double initial_storage) {
  if (!(initial_storage >= 0.0 && initial_storage <= 1.0)) {
    throw std::invalid_argument("initial storage must be in [0,1]");
  }
  const EnvConfig& env = ckpt.config.env;
  std::vector<PlanRow> rows;
  EnvState state = make_state(1, initial_storage, scenario, env);
  while (true) {
    const double action = ckpt.agent.policy.mean_action(observe(state));
    const StepOutcome out = step(state, action, scenario, env);
    rows.push_back({state.week, state.price, state.inflow, out.effective_action,
                    out.effective_action * env.f_max * env.r_max, out.end_storage, out.spill, out.reward});
    if (out.done) break;
    state = out.next_state;
  }
  return rows;
}

EnvConfig resolve_env_config(const EnvConfig& checkpoint_env, const std::optional<EnvConfig>& requested,
                             std::vector<std::string>& warnings) {
  if (!requested) return checkpoint_env;
  const auto ours = to_json(checkpoint_env, true);
  const auto theirs = to_json(*requested, true);
  for (const auto& [key, value] : ours.items()) {
    if (theirs.at(key) != value) {
      warnings.push_back("env." + key + ": requested " + theirs.at(key).get<std::string>() +
                         " ignored, checkpoint was trained with " + value.get<std::string>());
    }
  }
  return checkpoint_env;
}

std::string training_log_csv(const std::vector<EpisodeRecord>& log) {
  std::ostringstream out;
  out << "episode,total_reward,terminal_bonus,end_storage,total_spill,mean_action,seconds\n";
  for (const auto& r : log) {
    out << r.episode << ',' << format_double(r.total_reward) << ',' << format_double(r.terminal_bonus) << ','
        << format_double(r.end_storage) << ',' << format_double(r.total_spill) << ','
        << format_double(r.mean_action) << ',' << format_double(r.seconds) << '\n';
  }
  return out.str();
}

std::string trace_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "episode,week,price,inflow,action,storage,reward,accumulated_reward\n";
  for (const auto& trace : report.traces) {
    for (const auto& r : trace) {
      out << r.episode << ',' << r.week << ',' << format_double(r.price) << ',' << format_double(r.inflow) << ','
          << format_double(r.action) << ',' << format_double(r.storage) << ',' << format_double(r.reward) << ','
          << format_double(r.accumulated_reward) << '\n';
    }
  }
  return out.str();
}

std::string plan_csv(const std::vector<PlanRow>& rows) {
  std::ostringstream out;
  out << "week,price,inflow,action,release_volume_Mm3,storage,spill,reward\n";
  for (const auto& r : rows) {
    out << r.week << ',' << format_double(r.price) << ',' << format_double(r.inflow) << ','
        << format_double(r.action) << ',' << format_double(r.release_volume) << ',' << format_double(r.storage)
        << ',' << format_double(r.spill) << ',' << format_double(r.reward) << '\n';
  }
  return out.str();
}

std::uint64_t parameter_hash(const SacAgent& agent) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const Mlp& net) {
    for (double v : net.flatten()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
  };
  mix(agent.policy.trunk());
  mix(agent.policy.head());
  mix(agent.q1);
  mix(agent.q2);
  mix(agent.value);
  mix(agent.value_target);
  return h;
}

}  // namespace hydrosac
