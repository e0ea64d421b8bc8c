#pragma once

#include <span>

#include "hydrosac/mlp.hpp"

namespace hydrosac {

struct PolicyConfig {
  int hidden = 100;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  double log_prob_floor = 3e-6;  // additive floor inside log(a(1-a))
};

/// log density of a = sigmoid(pre_squash) when pre_squash ~ N(mean, exp(log_std)^2):
/// log N(z; mean, std) - log(a(1-a) + floor).
double squashed_log_prob(double pre_squash, double mean, double log_std, double floor);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// One reparameterized draw per batch column, with everything backward() needs.
struct PolicyBatch {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd log_std;  // after clamping
  Eigen::Array<bool, 1, Eigen::Dynamic> clamped;
  Eigen::RowVectorXd noise;
  Eigen::RowVectorXd pre_squash;
  Eigen::RowVectorXd action;
  Eigen::RowVectorXd log_prob;
};

struct PolicyGradients {
  MlpGradients trunk;
  MlpGradients head;
};

struct PolicySample {
  double action = 0.5;
  double log_prob = 0.0;
  double pre_squash = 0.0;
};

/// Two relu hidden layers, then a linear head emitting (mean, raw log std) per sample.
/// Actions are sigmoid(mean + std * noise), so they lie in (0,1).
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(Mlp trunk, Mlp head, PolicyConfig cfg);

  static PolicyNet init(int obs_size, const PolicyConfig& cfg, Rng& rng, double final_layer_bound);

  /// (mean, clamped log std) for a single observation.
  [[nodiscard]] std::pair<double, double> forward(std::span<const double> obs) const;

  [[nodiscard]] PolicySample sample(std::span<const double> obs, Rng& rng) const;
  [[nodiscard]] double mean_action(std::span<const double> obs) const;

  /// Batched draw with caller-supplied noise (1 x batch); caches activations for backward().
  PolicyBatch evaluate(const Eigen::MatrixXd& obs, const Eigen::RowVectorXd& noise);

  /// Gradients of sum_i (d_action_i * action_i + d_log_prob_i * log_prob_i) w.r.t. the
  /// policy parameters, holding the noise fixed. Requires the cache of evaluate().
  [[nodiscard]] PolicyGradients backward(const PolicyBatch& batch, const Eigen::RowVectorXd& d_action,
                                         const Eigen::RowVectorXd& d_log_prob) const;

  [[nodiscard]] const Mlp& trunk() const { return trunk_; }
  [[nodiscard]] const Mlp& head() const { return head_; }
  Mlp& trunk() { return trunk_; }
  Mlp& head() { return head_; }
  [[nodiscard]] const PolicyConfig& config() const { return cfg_; }

 private:
  Mlp trunk_;
  Mlp head_;
  PolicyConfig cfg_;
};

}  // namespace hydrosac
