#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hydrosac/random.hpp"

namespace hydrosac {

enum class Activation { relu, linear };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& text);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::linear;

  [[nodiscard]] Eigen::Index fan_in() const { return weights.cols(); }
  [[nodiscard]] Eigen::Index fan_out() const { return weights.rows(); }
};

struct LayerGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct MlpGradients {
  std::vector<LayerGradient> layers;  // empty when only the input gradient was requested
  Eigen::MatrixXd input;              // d objective / d input, in x batch
};

/// Dense feed-forward network. Batches are column-major: one sample per column.
///
/// forward() caches every layer input and pre-activation; backward() consumes that
/// cache, so a forward/backward pair is not reentrant on one instance. predict()
/// is const and leaves the cache alone.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  /// Hidden layers ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)]. The final layer uses
  /// U[-final_layer_bound, final_layer_bound] when a bound is given.
  static Mlp init(const std::vector<int>& widths, const std::vector<Activation>& activations, Rng& rng,
                  std::optional<double> final_layer_bound);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input);
  [[nodiscard]] Eigen::MatrixXd predict(const Eigen::MatrixXd& input) const;

  /// Reverse-mode gradients of a scalar objective given d objective / d output
  /// (out x batch). Parameter gradients are summed over the batch.
  [[nodiscard]] MlpGradients backward(const Eigen::MatrixXd& output_grad, bool parameter_grads = true) const;

  [[nodiscard]] const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  [[nodiscard]] std::vector<int> widths() const;
  [[nodiscard]] Eigen::Index input_size() const;
  [[nodiscard]] Eigen::Index output_size() const;
  [[nodiscard]] bool same_shape(const Mlp& other) const;
  [[nodiscard]] std::size_t parameter_count() const;

  /// Flat view of all parameters (layer by layer: weights row-major, then bias).
  [[nodiscard]] std::vector<double> flatten() const;

  void clear_cache() { cache_valid_ = false; }

 private:
  std::vector<DenseLayer> layers_;
  std::vector<Eigen::MatrixXd> cached_inputs_;
  std::vector<Eigen::MatrixXd> cached_pre_;
  bool cache_valid_ = false;
};

/// RMSprop state for one network: acc <- rho*acc + (1-rho)*g^2; p <- p - lr*g/(sqrt(acc)+eps).
class Rmsprop {
 public:
  Rmsprop() = default;
  Rmsprop(const Mlp& net, double learning_rate, double decay = 0.99, double epsilon = 1e-8);

  void step(Mlp& net, const MlpGradients& grads);

  [[nodiscard]] double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  [[nodiscard]] double decay() const { return decay_; }
  [[nodiscard]] double epsilon() const { return epsilon_; }

  [[nodiscard]] const std::vector<LayerGradient>& accumulators() const { return acc_; }
  std::vector<LayerGradient>& accumulators() { return acc_; }

 private:
  std::vector<LayerGradient> acc_;
  double lr_ = 1e-3;
  double decay_ = 0.99;
  double epsilon_ = 1e-8;
};

/// target <- (1 - tau) * target + tau * main, parameter by parameter.
void polyak_update(Mlp& target, const Mlp& main, double tau);

}  // namespace hydrosac
