#include "hydrosac/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace hydrosac {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)

// Keeps sigmoid outputs strictly inside (0,1) once exp() saturates.
constexpr double kActionEdge = std::numeric_limits<double>::epsilon() / 2;

double squash(double z) { return std::clamp(sigmoid(z), kActionEdge, 1.0 - kActionEdge); }

// a(1-a) without cancellation in the tails.
double squash_slope(double z) { return sigmoid(z) * sigmoid(-z); }

double log_prob_from_noise(double noise, double log_std, double pre_squash, double floor) {
  return -0.5 * noise * noise - log_std - kHalfLog2Pi - std::log(squash_slope(pre_squash) + floor);
}

Eigen::MatrixXd to_column(std::span<const double> obs) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(obs.size()), 1);
  for (std::size_t i = 0; i < obs.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = obs[i];
  return x;
}

}  // namespace

double squashed_log_prob(double pre_squash, double mean, double log_std, double floor) {
  double noise = (pre_squash - mean) / std::exp(log_std);
  return log_prob_from_noise(noise, log_std, pre_squash, floor);
}

PolicyNet::PolicyNet(Mlp trunk, Mlp head, PolicyConfig cfg)
    : trunk_(std::move(trunk)), head_(std::move(head)), cfg_(cfg) {
  if (head_.input_size() != trunk_.output_size() || head_.output_size() != 2) {
    throw std::invalid_argument("policy head must map the trunk output to (mean, log_std)");
  }
  if (!(cfg_.log_std_min <= cfg_.log_std_max)) throw std::invalid_argument("log std clamp range empty");
}

PolicyNet PolicyNet::init(int obs_size, const PolicyConfig& cfg, Rng& rng, double final_layer_bound) {
  Mlp trunk = Mlp::init({obs_size, cfg.hidden, cfg.hidden}, {Activation::relu, Activation::relu}, rng,
                        std::nullopt);
  Mlp head = Mlp::init({cfg.hidden, 2}, {Activation::linear}, rng, final_layer_bound);
  return PolicyNet(std::move(trunk), std::move(head), cfg);
}

std::pair<double, double> PolicyNet::forward(std::span<const double> obs) const {
  Eigen::MatrixXd out = head_.predict(trunk_.predict(to_column(obs)));
  return {out(0, 0), std::clamp(out(1, 0), cfg_.log_std_min, cfg_.log_std_max)};
}

PolicySample PolicyNet::sample(std::span<const double> obs, Rng& rng) const {
  auto [mean, log_std] = forward(obs);
  double noise = standard_normal(rng);
  PolicySample s;
  s.pre_squash = mean + std::exp(log_std) * noise;
  s.action = squash(s.pre_squash);
  s.log_prob = log_prob_from_noise(noise, log_std, s.pre_squash, cfg_.log_prob_floor);
  return s;
}

double PolicyNet::mean_action(std::span<const double> obs) const { return squash(forward(obs).first); }

PolicyBatch PolicyNet::evaluate(const Eigen::MatrixXd& obs, const Eigen::RowVectorXd& noise) {
  if (noise.size() != obs.cols()) throw std::invalid_argument("one noise value per sample required");
  Eigen::MatrixXd out = head_.forward(trunk_.forward(obs));
  const Eigen::Index n = obs.cols();
  PolicyBatch b;
  b.mean = out.row(0);
  b.log_std.resize(n);
  b.clamped.resize(n);
  b.noise = noise;
  b.pre_squash.resize(n);
  b.action.resize(n);
  b.log_prob.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double raw = out(1, i);
    b.log_std(i) = std::clamp(raw, cfg_.log_std_min, cfg_.log_std_max);
    b.clamped(i) = raw < cfg_.log_std_min || raw > cfg_.log_std_max;
    b.pre_squash(i) = b.mean(i) + std::exp(b.log_std(i)) * noise(i);
    b.action(i) = squash(b.pre_squash(i));
    b.log_prob(i) = log_prob_from_noise(noise(i), b.log_std(i), b.pre_squash(i), cfg_.log_prob_floor);
  }
  return b;
}

PolicyGradients PolicyNet::backward(const PolicyBatch& b, const Eigen::RowVectorXd& d_action,
                                    const Eigen::RowVectorXd& d_log_prob) const {
  const Eigen::Index n = b.mean.size();
  if (d_action.size() != n || d_log_prob.size() != n) {
    throw std::invalid_argument("upstream gradients must have one entry per sample");
  }
  Eigen::MatrixXd d_head(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = b.pre_squash(i);
    const double slope = squash_slope(z);                // da/dz
    const double a = sigmoid(z);
    // d/dz of -log(a(1-a) + floor)
    const double d_corr = -slope * (1.0 - 2.0 * a) / (slope + cfg_.log_prob_floor);
    const double d_z = d_action(i) * slope + d_log_prob(i) * d_corr;
    const double std_noise = std::exp(b.log_std(i)) * b.noise(i);  // dz/dlog_std
    d_head(0, i) = d_z;
    // With the noise held fixed the Gaussian term contributes -1 per unit log std.
    d_head(1, i) = b.clamped(i) ? 0.0 : d_z * std_noise - d_log_prob(i);
  }
  PolicyGradients g;
  g.head = head_.backward(d_head);
  g.trunk = trunk_.backward(g.head.input);
  return g;
}

}  // namespace hydrosac
