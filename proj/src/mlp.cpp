#include "hydrosac/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace hydrosac {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "linear"; }

Activation activation_from_string(const std::string& text) {
  if (text == "relu") return Activation::relu;
  if (text == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation '" + text + "'");
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weights.rows() == 0 || l.weights.cols() == 0 || l.bias.size() != l.weights.rows()) {
      throw std::invalid_argument("layer " + std::to_string(i) + " has inconsistent shape");
    }
    if (i > 0 && l.fan_in() != layers_[i - 1].fan_out()) {
      throw std::invalid_argument("layer " + std::to_string(i) + " does not chain with its predecessor");
    }
  }
}

Mlp Mlp::init(const std::vector<int>& widths, const std::vector<Activation>& activations, Rng& rng,
              std::optional<double> final_layer_bound) {
  if (widths.size() < 2) throw std::invalid_argument("widths needs at least two entries");
  if (activations.size() != widths.size() - 1) {
    throw std::invalid_argument("need one activation per layer");
  }
  for (int w : widths) {
    if (w <= 0) throw std::invalid_argument("layer widths must be positive");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    double bound = (last && final_layer_bound) ? *final_layer_bound : 1.0 / std::sqrt(double(widths[i]));
    DenseLayer layer;
    layer.weights.resize(widths[i + 1], widths[i]);
    layer.bias.resize(widths[i + 1]);
    layer.activation = activations[i];
    // Row-major fill order keeps the stream layout independent of Eigen's storage order.
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = bound > 0.0 ? uniform(rng, -bound, bound) : 0.0;
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      layer.bias(r) = bound > 0.0 ? uniform(rng, -bound, bound) : 0.0;
    }
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

namespace {

void apply_activation(Eigen::MatrixXd& x, Activation a) {
  if (a == Activation::relu) x = x.cwiseMax(0.0);
}

}  // namespace

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) {
  if (input.rows() != input_size()) {
    throw std::invalid_argument("input has " + std::to_string(input.rows()) + " rows, network expects " +
                                std::to_string(input_size()));
  }
  cached_inputs_.resize(layers_.size());
  cached_pre_.resize(layers_.size());
  Eigen::MatrixXd x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    cached_inputs_[i] = x;
    cached_pre_[i].noalias() = l.weights * x;
    cached_pre_[i].colwise() += l.bias;
    x = cached_pre_[i];
    apply_activation(x, l.activation);
  }
  cache_valid_ = true;
  return x;
}

Eigen::MatrixXd Mlp::predict(const Eigen::MatrixXd& input) const {
  if (input.rows() != input_size()) throw std::invalid_argument("input dimension mismatch");
  Eigen::MatrixXd x = input;
  for (const auto& l : layers_) {
    Eigen::MatrixXd z = l.weights * x;
    z.colwise() += l.bias;
    apply_activation(z, l.activation);
    x = std::move(z);
  }
  return x;
}

MlpGradients Mlp::backward(const Eigen::MatrixXd& output_grad, bool parameter_grads) const {
  if (!cache_valid_) throw std::logic_error("backward called without a cached forward pass");
  const Eigen::Index batch = cached_inputs_.front().cols();
  if (output_grad.rows() != output_size() || output_grad.cols() != batch) {
    throw std::invalid_argument("output gradient shape does not match the cached forward pass");
  }
  MlpGradients grads;
  if (parameter_grads) grads.layers.resize(layers_.size());
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& l = layers_[k];
    if (l.activation == Activation::relu) {
      delta = (cached_pre_[k].array() > 0.0).select(delta, 0.0);
    }
    if (parameter_grads) {
      grads.layers[k].weights.noalias() = delta * cached_inputs_[k].transpose();
      grads.layers[k].bias = delta.rowwise().sum();
    }
    Eigen::MatrixXd upstream = l.weights.transpose() * delta;
    delta = std::move(upstream);
  }
  grads.input = std::move(delta);
  return grads;
}

std::vector<int> Mlp::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(static_cast<int>(layers_.front().fan_in()));
  for (const auto& l : layers_) w.push_back(static_cast<int>(l.fan_out()));
  return w;
}

Eigen::Index Mlp::input_size() const { return layers_.empty() ? 0 : layers_.front().fan_in(); }
Eigen::Index Mlp::output_size() const { return layers_.empty() ? 0 : layers_.back().fan_out(); }

bool Mlp::same_shape(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].weights.rows() != other.layers_[i].weights.rows() ||
        layers_[i].weights.cols() != other.layers_[i].weights.cols() ||
        layers_[i].activation != other.layers_[i].activation) {
      return false;
    }
  }
  return true;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out.push_back(l.weights(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
  return out;
}

Rmsprop::Rmsprop(const Mlp& net, double learning_rate, double decay, double epsilon)
    : lr_(learning_rate), decay_(decay), epsilon_(epsilon) {
  for (const auto& l : net.layers()) {
    acc_.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                    Eigen::VectorXd::Zero(l.bias.size())});
  }
}

void Rmsprop::step(Mlp& net, const MlpGradients& grads) {
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size() || acc_.size() != layers.size()) {
    throw std::invalid_argument("optimizer state does not match the network");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& acc = acc_[i];
    const auto& g = grads.layers[i];
    acc.weights.array() = decay_ * acc.weights.array() + (1.0 - decay_) * g.weights.array().square();
    acc.bias.array() = decay_ * acc.bias.array() + (1.0 - decay_) * g.bias.array().square();
    layers[i].weights.array() -= lr_ * g.weights.array() / (acc.weights.array().sqrt() + epsilon_);
    layers[i].bias.array() -= lr_ * g.bias.array() / (acc.bias.array().sqrt() + epsilon_);
  }
  net.clear_cache();
}

void polyak_update(Mlp& target, const Mlp& main, double tau) {
  if (!target.same_shape(main)) throw std::invalid_argument("polyak_update: shape mismatch");
  auto& t = target.layers();
  const auto& m = main.layers();
  for (std::size_t i = 0; i < t.size(); ++i) {
    // Rounding can land one ulp outside [min, max]; clamp so the result stays a convex combination.
    auto blend = [tau](const auto& a, const auto& b) {
      return ((1.0 - tau) * a.array() + tau * b.array()).max(a.array().min(b.array())).min(a.array().max(b.array()));
    };
    t[i].weights = blend(t[i].weights, m[i].weights).matrix();
    t[i].bias = blend(t[i].bias, m[i].bias).matrix();
  }
  target.clear_cache();
}

}  // namespace hydrosac
