#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acvae/gaussian.hpp"

namespace acvae {

using Vector = Eigen::VectorXd;
using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;

// input -> tanh hidden layer -> linear output. Parameters and gradients live
// in two flat buffers of identical layout: W1 (hidden x in, column major),
// b1, W2 (out x hidden), b2.
class DenseNet {
 public:
  struct Cache {
    Vector hidden;  // tanh activations
  };

  DenseNet() = default;
  DenseNet(std::size_t n_in, std::size_t n_hidden, std::size_t n_out);

  std::size_t n_in() const noexcept { return n_in_; }
  std::size_t n_hidden() const noexcept { return n_hidden_; }
  std::size_t n_out() const noexcept { return n_out_; }
  std::size_t size() const noexcept { return params_.size(); }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> grads() noexcept { return grads_; }
  std::span<const double> grads() const noexcept { return grads_; }
  void zero_grad();

  // Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)); zero biases.
  void init_glorot(std::mt19937_64& rng);

  Vector forward(const ConstVectorRef& x, Cache* cache = nullptr) const;
  // Accumulates parameter gradients for upstream gradient grad_out and
  // returns the gradient with respect to x.
  Vector backward(const ConstVectorRef& x, const Cache& cache, const ConstVectorRef& grad_out);

  Eigen::Map<const Eigen::MatrixXd> w1() const;
  Eigen::Map<const Eigen::VectorXd> b1() const;
  Eigen::Map<const Eigen::MatrixXd> w2() const;
  Eigen::Map<const Eigen::VectorXd> b2() const;

 private:
  std::size_t n_in_ = 0, n_hidden_ = 0, n_out_ = 0;
  std::vector<double> params_;
  std::vector<double> grads_;
};

inline constexpr double kRhoScale = 0.999;

double softplus(double x);
double sigmoid(double x);

// Encoder (mean and raw std heads), symmetric correlation network and
// multinomial decoder.
struct ModelParams {
  std::size_t feature_dim = 0;
  std::size_t latent_dim = 0;
  DenseNet encoder;  // D -> h1 -> 2d (mean, raw std)
  DenseNet corr;     // 2D -> h2 -> d
  DenseNet decoder;  // d -> h1 -> D logits

  static ModelParams create(std::size_t feature_dim, std::size_t latent_dim, std::size_t hidden_encoder,
                            std::size_t hidden_corr, std::uint64_t seed);

  std::array<DenseNet*, 3> nets() { return {&encoder, &corr, &decoder}; }
  std::array<const DenseNet*, 3> nets() const { return {&encoder, &corr, &decoder}; }
  std::size_t n_params() const;
  double& param(std::size_t flat_index);
  double param(std::size_t flat_index) const;
  double grad(std::size_t flat_index) const;
  void zero_grad();
};

DiagGaussian encode(const ModelParams& params, const ConstVectorRef& x);

// Pre-activation correlation logits u_k = (c(x_i, x_j) + c(x_j, x_i)) / 2,
// so rho_k = 0.999 tanh(u_k).
Vector correlation_logits(const ModelParams& params, const ConstVectorRef& x_i, const ConstVectorRef& x_j);
PairGaussian encode_pair(const ModelParams& params, const ConstVectorRef& x_i, const ConstVectorRef& x_j);

struct LogLikelihood {
  double value = 0.0;
  bool empty_input = false;  // x had no mass; value is defined as 0
};

// sum_w x_w log softmax(decoder(z))_w
LogLikelihood decode_log_likelihood(const ModelParams& params, const ConstVectorRef& z, const ConstVectorRef& x);
// Same value; accumulates decoder gradients scaled by `scale` and returns
// scale * d/dz.
LogLikelihood decode_log_likelihood_backward(ModelParams& params, const ConstVectorRef& z,
                                             const ConstVectorRef& x, double scale, Vector& grad_z);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

// One bias-corrected Adam descent step along the gradients stored in params.
// Throws TrainingError naming the first non-finite gradient entry.
void adam_step(AdamState& state, ModelParams& params);

// Returns the loss and leaves its gradient in the params' grad buffers.
using LossClosure = std::function<double(ModelParams&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t n_checked = 0;
};

// Central differences at step h on n_samples randomly chosen parameters.
// Relative error is |a - n| / max(|a|, |n|, abs_floor).
GradCheckResult grad_check(ModelParams& params, const LossClosure& loss, std::size_t n_samples,
                           std::uint64_t seed, double h = 1e-4, double abs_floor = 1e-6);

}  // namespace acvae
