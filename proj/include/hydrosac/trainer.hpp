#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hydrosac/env.hpp"
#include "hydrosac/sac.hpp"
#include "hydrosac/scenario.hpp"

namespace hydrosac {

struct TrainConfig {
  std::int64_t total_weeks = 300000;
  std::int64_t exploration_weeks = 10000;  // 50000 for historic data
  int batch_size = 100;
  std::uint64_t seed = 0;
  int checkpoint_every_episodes = 0;  // 0: final checkpoint only
  bool include_replay = false;
  EnvConfig env;
  SacConfig agent;
  std::string pools_path;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpisodeRecord {
  std::int64_t episode = 0;
  double total_reward = 0.0;
  double terminal_bonus = 0.0;
  double end_storage = 0.0;
  double total_spill = 0.0;
  double mean_action = 0.0;
  double seconds = 0.0;  // wall clock, only filled when timing is requested
};

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int version = kCheckpointVersion;
  TrainConfig config;
  SacAgent agent;
  std::string rng_state;
  std::int64_t episode = 0;
  std::int64_t global_step = 0;
  bool replay_included = false;
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const NonFiniteLoss& cause, std::int64_t step, std::vector<EpisodeRecord> partial);
  LossReport report;
  std::int64_t step;
  std::vector<EpisodeRecord> partial_log;
};

struct TrainHooks {
  std::function<void(const EpisodeRecord&)> on_episode;
  std::function<void(const Checkpoint&)> on_checkpoint;  // every checkpoint_every_episodes
  bool measure_wall_clock = false;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpisodeRecord> log;
};

/// Runs 52-week episodes until total_weeks environment steps have elapsed. The first
/// exploration_weeks steps use uniform random actions; every later step draws from
/// the policy and performs one update. A trailing partial year is simulated but not
/// logged. Throws TrainingAborted on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const ScenarioPools& pools, const TrainHooks& hooks = {});

struct TraceRow {
  int episode = 0;
  int week = 0;
  double price = 0.0;
  double inflow = 0.0;
  double action = 0.0;  // effective (feasible) action
  double storage = 0.0;  // end of week
  double spill = 0.0;
  double reward = 0.0;   // includes the terminal bonus in week 52
  double accumulated_reward = 0.0;
};

struct EvalReport {
  std::vector<double> total_rewards;
  std::vector<double> end_storages;
  std::vector<std::vector<TraceRow>> traces;
};

/// Maps an observation to an action in [0,1]; the generator is per episode.
using PolicyFn = std::function<double(const Observation&, Rng&)>;

/// Episode i draws its scenario and initial storage from derive_rng(seed, i, 0) and
/// its actions from derive_rng(seed, i, 1), so different policies see identical years.
EvalReport evaluate_policy(const PolicyFn& policy, const ScenarioPools& pools, const EnvConfig& env,
                           int n_episodes, std::uint64_t seed);

EvalReport evaluate(const Checkpoint& ckpt, const ScenarioPools& pools, int n_episodes, bool deterministic,
                    std::uint64_t seed);

struct PlanRow {
  int week = 0;
  double price = 0.0;
  double inflow = 0.0;
  double action = 0.0;
  double release_volume = 0.0;  // Mm3
  double storage = 0.0;
  double spill = 0.0;
  double reward = 0.0;
};

/// Deterministic rollout of the checkpointed policy over one given year.
std::vector<PlanRow> plan(const Checkpoint& ckpt, const Scenario& scenario, double initial_storage);

/// Checkpoint environment wins; each field that differs from `requested` adds a warning.
EnvConfig resolve_env_config(const EnvConfig& checkpoint_env, const std::optional<EnvConfig>& requested,
                             std::vector<std::string>& warnings);

std::string training_log_csv(const std::vector<EpisodeRecord>& log);
std::string trace_csv(const EvalReport& report);
std::string plan_csv(const std::vector<PlanRow>& rows);

// Checkpoint persistence (JSON, doubles as exact decimal strings).
std::string checkpoint_to_json(const Checkpoint& ckpt, int indent = -1);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over every network parameter bit pattern; used to show evaluation is read-only.
std::uint64_t parameter_hash(const SacAgent& agent);

}  // namespace hydrosac
