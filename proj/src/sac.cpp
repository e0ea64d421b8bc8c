#include "hydrosac/sac.hpp"

#include <cmath>
#include <sstream>

namespace hydrosac {

void SacConfig::validate() const {
  if (hidden < 1) throw std::invalid_argument("hidden width must be >= 1");
  if (!(init_bound >= 0.0)) throw std::invalid_argument("init_bound must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0,1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must be in [0,1]");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (!(lr_value >= 0.0 && lr_q >= 0.0 && lr_policy >= 0.0)) {
    throw std::invalid_argument("learning rates must be >= 0");
  }
  if (!(log_std_min <= log_std_max)) throw std::invalid_argument("log std clamp range empty");
  if (!(log_prob_floor >= 0.0)) throw std::invalid_argument("log_prob_floor must be >= 0");
  if (!(rms_decay >= 0.0 && rms_decay < 1.0)) throw std::invalid_argument("rms_decay must be in [0,1)");
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (items_.size() < batch_size || batch_size == 0) {
    throw std::logic_error("replay buffer holds " + std::to_string(items_.size()) +
                           " transitions, batch of " + std::to_string(batch_size) + " requested");
  }
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(items_[pick(rng)]);
  return batch;
}

bool LossReport::finite() const {
  return std::isfinite(q1_loss) && std::isfinite(q2_loss) && std::isfinite(value_loss) &&
         std::isfinite(policy_loss) && std::isfinite(mean_log_prob);
}

namespace {

std::string describe(const LossReport& r) {
  std::ostringstream s;
  s.precision(17);
  s << "non-finite loss: q1=" << r.q1_loss << " q2=" << r.q2_loss << " value=" << r.value_loss
    << " policy=" << r.policy_loss << " mean_log_prob=" << r.mean_log_prob;
  return s.str();
}

Eigen::MatrixXd stack_action(const Eigen::MatrixXd& obs, const Eigen::RowVectorXd& action) {
  Eigen::MatrixXd sa(obs.rows() + 1, obs.cols());
  sa.topRows(obs.rows()) = obs;
  sa.bottomRows(1) = action;
  return sa;
}

}  // namespace

NonFiniteLoss::NonFiniteLoss(const LossReport& r) : std::runtime_error(describe(r)), report(r) {}

BatchMatrices BatchMatrices::from(const std::vector<Transition>& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  BatchMatrices m;
  m.obs.resize(kObsSize, n);
  m.next_obs.resize(kObsSize, n);
  m.action.resize(n);
  m.reward.resize(n);
  m.done.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = batch[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < kObsSize; ++k) {
      m.obs(static_cast<Eigen::Index>(k), i) = t.obs[k];
      m.next_obs(static_cast<Eigen::Index>(k), i) = t.next_obs[k];
    }
    m.action(i) = t.action;
    m.reward(i) = t.reward;
    m.done(i) = t.done ? 1.0 : 0.0;
  }
  return m;
}

Eigen::RowVectorXd compute_q_targets(const BatchMatrices& batch, const Mlp& value_target, double gamma) {
  Eigen::RowVectorXd v_next = value_target.predict(batch.next_obs);
  return batch.reward.array() + gamma * (1.0 - batch.done.array()) * v_next.array();
}

PolicyConfig policy_config_of(const SacConfig& cfg) {
  return {cfg.hidden, cfg.log_std_min, cfg.log_std_max, cfg.log_prob_floor};
}

SacAgent::SacAgent(const SacConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const int h = cfg_.hidden;
  const std::vector<Activation> three_hidden{Activation::relu, Activation::relu, Activation::relu,
                                             Activation::linear};
  policy = PolicyNet::init(static_cast<int>(kObsSize), policy_config_of(cfg_), rng, cfg_.init_bound);
  q1 = Mlp::init({static_cast<int>(kObsSize) + 1, h, h, h, 1}, three_hidden, rng, cfg_.init_bound);
  q2 = Mlp::init({static_cast<int>(kObsSize) + 1, h, h, h, 1}, three_hidden, rng, cfg_.init_bound);
  value = Mlp::init({static_cast<int>(kObsSize), h, h, h, 1}, three_hidden, rng, cfg_.init_bound);
  value_target = value;
  reset_optimizers();
}

SacAgent::SacAgent(const SacConfig& cfg, PolicyNet policy_net, Mlp q1_net, Mlp q2_net, Mlp value_net,
                   Mlp value_target_net)
    : policy(std::move(policy_net)),
      q1(std::move(q1_net)),
      q2(std::move(q2_net)),
      value(std::move(value_net)),
      value_target(std::move(value_target_net)),
      cfg_(cfg) {
  cfg_.validate();
  if (!value.same_shape(value_target)) throw std::invalid_argument("value and target shapes differ");
  if (!q1.same_shape(q2)) throw std::invalid_argument("twin Q networks differ in shape");
  policy = PolicyNet(policy.trunk(), policy.head(), policy_config_of(cfg_));
  reset_optimizers();
}

void SacAgent::reset_optimizers() {
  q1_opt = Rmsprop(q1, cfg_.lr_q, cfg_.rms_decay, cfg_.rms_epsilon);
  q2_opt = Rmsprop(q2, cfg_.lr_q, cfg_.rms_decay, cfg_.rms_epsilon);
  value_opt = Rmsprop(value, cfg_.lr_value, cfg_.rms_decay, cfg_.rms_epsilon);
  policy_trunk_opt = Rmsprop(policy.trunk(), cfg_.lr_policy, cfg_.rms_decay, cfg_.rms_epsilon);
  policy_head_opt = Rmsprop(policy.head(), cfg_.lr_policy, cfg_.rms_decay, cfg_.rms_epsilon);
}

void SacAgent::set_config(const SacConfig& cfg) {
  cfg.validate();
  if (cfg.hidden != cfg_.hidden) throw std::invalid_argument("cannot change hidden width of a built agent");
  cfg_ = cfg;
  q1_opt.set_learning_rate(cfg.lr_q);
  q2_opt.set_learning_rate(cfg.lr_q);
  value_opt.set_learning_rate(cfg.lr_value);
  policy_trunk_opt.set_learning_rate(cfg.lr_policy);
  policy_head_opt.set_learning_rate(cfg.lr_policy);
  policy = PolicyNet(policy.trunk(), policy.head(), policy_config_of(cfg));
}

LossReport SacAgent::update(const std::vector<Transition>& batch, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("update needs a non-empty batch");
  const BatchMatrices m = BatchMatrices::from(batch);
  const auto n = static_cast<Eigen::Index>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(n);

  // Fresh reparameterized actions from the current policy.
  Eigen::RowVectorXd noise(n);
  for (Eigen::Index i = 0; i < n; ++i) noise(i) = standard_normal(rng);
  const PolicyBatch pb = policy.evaluate(m.obs, noise);

  // min_k Q_k(obs, new action) and its derivative w.r.t. the action.
  const Eigen::MatrixXd sa_new = stack_action(m.obs, pb.action);
  const Eigen::RowVectorXd q1_new = q1.forward(sa_new);
  const Eigen::RowVectorXd q2_new = q2.forward(sa_new);
  Eigen::RowVectorXd q_min(n), pick1(n), pick2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool first = q1_new(i) <= q2_new(i);
    q_min(i) = first ? q1_new(i) : q2_new(i);
    pick1(i) = first ? 1.0 : 0.0;
    pick2(i) = first ? 0.0 : 1.0;
  }
  // Both caches still hold sa_new.
  const Eigen::RowVectorXd dq1 = q1.backward(pick1, false).input.bottomRows(1);
  const Eigen::RowVectorXd dq2 = q2.backward(pick2, false).input.bottomRows(1);
  const Eigen::RowVectorXd dq_min_da = dq1 + dq2;

  // Twin soft-Q regression.
  const Eigen::RowVectorXd q_target = compute_q_targets(m, value_target, cfg_.gamma);
  const Eigen::MatrixXd sa = stack_action(m.obs, m.action);
  const Eigen::RowVectorXd q1_err = q1.forward(sa) - q_target;
  const MlpGradients q1_grads = q1.backward(2.0 * inv_n * q1_err);
  const Eigen::RowVectorXd q2_err = q2.forward(sa) - q_target;
  const MlpGradients q2_grads = q2.backward(2.0 * inv_n * q2_err);

  // Value regression to the soft state value.
  const Eigen::RowVectorXd v_target = q_min - cfg_.alpha * pb.log_prob;
  const Eigen::RowVectorXd v_err = value.forward(m.obs) - v_target;
  const MlpGradients v_grads = value.backward(2.0 * inv_n * v_err);

  // Policy: mean(alpha * log pi - min Q), gradient flows only into the policy.
  const Eigen::RowVectorXd d_action = -inv_n * dq_min_da;
  const Eigen::RowVectorXd d_log_prob = Eigen::RowVectorXd::Constant(n, cfg_.alpha * inv_n);
  const PolicyGradients p_grads = policy.backward(pb, d_action, d_log_prob);

  LossReport report;
  report.q1_loss = q1_err.squaredNorm() * inv_n;
  report.q2_loss = q2_err.squaredNorm() * inv_n;
  report.value_loss = v_err.squaredNorm() * inv_n;
  report.policy_loss = (cfg_.alpha * pb.log_prob - q_min).mean();
  report.mean_log_prob = pb.log_prob.mean();
  if (!report.finite()) throw NonFiniteLoss(report);

  q1_opt.step(q1, q1_grads);
  q2_opt.step(q2, q2_grads);
  value_opt.step(value, v_grads);
  policy_trunk_opt.step(policy.trunk(), p_grads.trunk);
  policy_head_opt.step(policy.head(), p_grads.head);
  polyak_update(value_target, value, cfg_.tau);
  return report;
}

double SacAgent::select_action(const Observation& obs, ActionMode mode, Rng& rng) const {
  switch (mode) {
    case ActionMode::explore_random:
      return uniform_open01(rng);
    case ActionMode::stochastic:
      return policy.sample(obs, rng).action;
    case ActionMode::deterministic:
      return policy.mean_action(obs);
  }
  throw std::invalid_argument("unknown action mode");
}

}  // namespace hydrosac
