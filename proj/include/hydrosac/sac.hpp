#pragma once

#include <stdexcept>
#include <vector>

#include "hydrosac/env.hpp"
#include "hydrosac/mlp.hpp"
#include "hydrosac/policy.hpp"

namespace hydrosac {

struct SacConfig {
  int hidden = 100;
  double init_bound = 3e-3;  // uniform bound for output layers
  double gamma = 0.99;
  double tau = 0.0006;
  double alpha = 0.2;  // fixed entropy temperature
  double lr_value = 5e-4;
  double lr_q = 5e-4;
  double lr_policy = 1e-4;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  double log_prob_floor = 3e-6;
  double rms_decay = 0.99;
  double rms_epsilon = 1e-8;

  void validate() const;
  bool operator==(const SacConfig&) const = default;
};

struct Transition {
  Observation obs{};
  double action = 0.5;
  double reward = 0.0;
  Observation next_obs{};
  bool done = false;
};

/// Unbounded experience memory; nothing is ever evicted.
class ReplayBuffer {
 public:
  void push(const Transition& t) { items_.push_back(t); }
  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] const Transition& operator[](std::size_t i) const { return items_.at(i); }
  [[nodiscard]] const std::vector<Transition>& items() const { return items_; }
  void reserve(std::size_t n) { items_.reserve(n); }
  void clear() { items_.clear(); }

  /// batch_size uniform draws with replacement. Throws std::logic_error if size() < batch_size.
  [[nodiscard]] std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::vector<Transition> items_;
};

struct LossReport {
  double q1_loss = 0.0;
  double q2_loss = 0.0;
  double value_loss = 0.0;
  double policy_loss = 0.0;
  double mean_log_prob = 0.0;

  [[nodiscard]] bool finite() const;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(const LossReport& report);
  LossReport report;
};

enum class ActionMode { explore_random, stochastic, deterministic };

/// Column-major batch view of a list of transitions.
struct BatchMatrices {
  Eigen::MatrixXd obs;       // 5 x n
  Eigen::RowVectorXd action;
  Eigen::RowVectorXd reward;
  Eigen::MatrixXd next_obs;  // 5 x n
  Eigen::RowVectorXd done;   // 1.0 for terminal

  static BatchMatrices from(const std::vector<Transition>& batch);
};

/// reward + gamma * (1 - done) * V_target(next_obs)
Eigen::RowVectorXd compute_q_targets(const BatchMatrices& batch, const Mlp& value_target, double gamma);

/// Policy, twin soft-Q networks, value and target value networks, their optimizers and
/// the replay memory.
class SacAgent {
 public:
  SacAgent() = default;
  SacAgent(const SacConfig& cfg, Rng& rng);
  /// Wraps existing networks with fresh optimizer states (used when loading checkpoints).
  SacAgent(const SacConfig& cfg, PolicyNet policy, Mlp q1, Mlp q2, Mlp value, Mlp value_target);

  /// One full update on a batch: twin-Q regression to the soft Bellman target, value
  /// regression to min Q - alpha log pi, policy step through the reparameterized
  /// action, then Polyak averaging of the target value network. All losses and
  /// gradients are taken from the pre-update parameters.
  LossReport update(const std::vector<Transition>& batch, Rng& rng);

  [[nodiscard]] double select_action(const Observation& obs, ActionMode mode, Rng& rng) const;

  [[nodiscard]] const SacConfig& config() const { return cfg_; }
  void set_config(const SacConfig& cfg);

  PolicyNet policy;
  Mlp q1, q2, value, value_target;
  Rmsprop q1_opt, q2_opt, value_opt, policy_trunk_opt, policy_head_opt;
  ReplayBuffer replay;

 private:
  void reset_optimizers();

  SacConfig cfg_;
};

PolicyConfig policy_config_of(const SacConfig& cfg);

}  // namespace hydrosac
