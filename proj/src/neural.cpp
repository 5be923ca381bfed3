#include "acvae/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "acvae/error.hpp"

namespace acvae {

DenseNet::DenseNet(std::size_t n_in, std::size_t n_hidden, std::size_t n_out)
    : n_in_(n_in),
      n_hidden_(n_hidden),
      n_out_(n_out),
      params_(n_hidden * n_in + n_hidden + n_out * n_hidden + n_out, 0.0),
      grads_(params_.size(), 0.0) {}

void DenseNet::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void DenseNet::init_glorot(std::mt19937_64& rng) {
  const auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> unif(-a, a);
    for (std::size_t k = 0; k < count; ++k) params_[offset + k] = unif(rng);
  };
  std::fill(params_.begin(), params_.end(), 0.0);
  fill(0, n_hidden_ * n_in_, n_in_, n_hidden_);
  fill(n_hidden_ * n_in_ + n_hidden_, n_out_ * n_hidden_, n_hidden_, n_out_);
}

Eigen::Map<const Eigen::MatrixXd> DenseNet::w1() const {
  return {params_.data(), static_cast<Eigen::Index>(n_hidden_), static_cast<Eigen::Index>(n_in_)};
}
Eigen::Map<const Eigen::VectorXd> DenseNet::b1() const {
  return {params_.data() + n_hidden_ * n_in_, static_cast<Eigen::Index>(n_hidden_)};
}
Eigen::Map<const Eigen::MatrixXd> DenseNet::w2() const {
  return {params_.data() + n_hidden_ * n_in_ + n_hidden_, static_cast<Eigen::Index>(n_out_),
          static_cast<Eigen::Index>(n_hidden_)};
}
Eigen::Map<const Eigen::VectorXd> DenseNet::b2() const {
  return {params_.data() + n_hidden_ * n_in_ + n_hidden_ + n_out_ * n_hidden_, static_cast<Eigen::Index>(n_out_)};
}

Vector DenseNet::forward(const ConstVectorRef& x, Cache* cache) const {
  if (static_cast<std::size_t>(x.size()) != n_in_) {
    throw InputError("network input has size " + std::to_string(x.size()) + ", expected " + std::to_string(n_in_));
  }
  Vector hidden = (w1() * x + b1()).array().tanh().matrix();
  Vector out = w2() * hidden + b2();
  if (cache != nullptr) cache->hidden = std::move(hidden);
  return out;
}

Vector DenseNet::backward(const ConstVectorRef& x, const Cache& cache, const ConstVectorRef& grad_out) {
  const auto h = static_cast<Eigen::Index>(n_hidden_);
  const auto in = static_cast<Eigen::Index>(n_in_);
  const auto out = static_cast<Eigen::Index>(n_out_);
  double* g = grads_.data();
  Eigen::Map<Eigen::MatrixXd> gw1(g, h, in);
  Eigen::Map<Eigen::VectorXd> gb1(g + h * in, h);
  Eigen::Map<Eigen::MatrixXd> gw2(g + h * in + h, out, h);
  Eigen::Map<Eigen::VectorXd> gb2(g + h * in + h + out * h, out);

  gw2.noalias() += grad_out * cache.hidden.transpose();
  gb2 += grad_out;
  const Vector grad_pre = ((w2().transpose() * grad_out).array() * (1.0 - cache.hidden.array().square())).matrix();
  gw1.noalias() += grad_pre * x.transpose();
  gb1 += grad_pre;
  return w1().transpose() * grad_pre;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ModelParams ModelParams::create(std::size_t feature_dim, std::size_t latent_dim, std::size_t hidden_encoder,
                                std::size_t hidden_corr, std::uint64_t seed) {
  if (feature_dim == 0 || latent_dim == 0 || hidden_encoder == 0 || hidden_corr == 0) {
    throw InputError("network dimensions must be positive");
  }
  ModelParams p;
  p.feature_dim = feature_dim;
  p.latent_dim = latent_dim;
  p.encoder = DenseNet(feature_dim, hidden_encoder, 2 * latent_dim);
  p.corr = DenseNet(2 * feature_dim, hidden_corr, latent_dim);
  p.decoder = DenseNet(latent_dim, hidden_encoder, feature_dim);
  std::mt19937_64 rng(seed);
  for (DenseNet* net : p.nets()) net->init_glorot(rng);
  return p;
}

std::size_t ModelParams::n_params() const { return encoder.size() + corr.size() + decoder.size(); }

double& ModelParams::param(std::size_t flat_index) {
  for (DenseNet* net : nets()) {
    if (flat_index < net->size()) return net->params()[flat_index];
    flat_index -= net->size();
  }
  throw InputError("parameter index out of range");
}

double ModelParams::param(std::size_t flat_index) const {
  for (const DenseNet* net : nets()) {
    if (flat_index < net->size()) return net->params()[flat_index];
    flat_index -= net->size();
  }
  throw InputError("parameter index out of range");
}

double ModelParams::grad(std::size_t flat_index) const {
  for (const DenseNet* net : nets()) {
    if (flat_index < net->size()) return net->grads()[flat_index];
    flat_index -= net->size();
  }
  throw InputError("parameter index out of range");
}

void ModelParams::zero_grad() {
  for (DenseNet* net : nets()) net->zero_grad();
}

DiagGaussian encode(const ModelParams& params, const ConstVectorRef& x) {
  const Vector out = params.encoder.forward(x);
  const std::size_t d = params.latent_dim;
  DiagGaussian q{std::vector<double>(d), std::vector<double>(d)};
  for (std::size_t k = 0; k < d; ++k) {
    q.mean[k] = out(static_cast<Eigen::Index>(k));
    q.std[k] = std::max(softplus(out(static_cast<Eigen::Index>(d + k))), kNumericFloor);
  }
  return q;
}

Vector correlation_logits(const ModelParams& params, const ConstVectorRef& x_i, const ConstVectorRef& x_j) {
  if (x_i.size() != x_j.size()) throw InputError("feature vectors differ in size");
  Vector ij(2 * x_i.size());
  ij << x_i, x_j;
  Vector ji(2 * x_i.size());
  ji << x_j, x_i;
  return 0.5 * (params.corr.forward(ij) + params.corr.forward(ji));
}

PairGaussian encode_pair(const ModelParams& params, const ConstVectorRef& x_i, const ConstVectorRef& x_j) {
  const DiagGaussian qi = encode(params, x_i);
  const DiagGaussian qj = encode(params, x_j);
  const Vector u = correlation_logits(params, x_i, x_j);
  std::vector<double> rho(params.latent_dim);
  for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = kRhoScale * std::tanh(u(static_cast<Eigen::Index>(k)));
  return {qi.mean, qj.mean, qi.std, qj.std, std::move(rho)};
}

namespace {

// Returns log softmax of the logits.
Vector log_softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.array() - lse).matrix();
}

}  // namespace

LogLikelihood decode_log_likelihood(const ModelParams& params, const ConstVectorRef& z, const ConstVectorRef& x) {
  if (static_cast<std::size_t>(x.size()) != params.feature_dim) throw InputError("count vector has wrong size");
  const double mass = x.sum();
  if (mass == 0.0) return {0.0, true};
  const Vector logp = log_softmax(params.decoder.forward(z));
  return {x.dot(logp), false};
}

LogLikelihood decode_log_likelihood_backward(ModelParams& params, const ConstVectorRef& z,
                                             const ConstVectorRef& x, double scale, Vector& grad_z) {
  if (static_cast<std::size_t>(x.size()) != params.feature_dim) throw InputError("count vector has wrong size");
  const double mass = x.sum();
  if (mass == 0.0) {
    grad_z = Vector::Zero(z.size());
    return {0.0, true};
  }
  DenseNet::Cache cache;
  const Vector logp = log_softmax(params.decoder.forward(z, &cache));
  const Vector grad_logits = scale * (x - mass * logp.array().exp().matrix());
  grad_z = params.decoder.backward(z, cache, grad_logits);
  return {x.dot(logp), false};
}

void adam_step(AdamState& state, ModelParams& params) {
  const std::size_t total = params.n_params();
  if (state.m.size() != total) {
    if (state.step != 0) throw InputError("Adam state shape does not match parameters");
    state.m.assign(total, 0.0);
    state.v.assign(total, 0.0);
  }
  std::size_t offset = 0;
  for (const DenseNet* net : params.nets()) {
    const auto g = net->grads();
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!std::isfinite(g[k])) {
        throw TrainingError("non-finite gradient " + std::to_string(g[k]) + " at flat parameter " +
                            std::to_string(offset + k) + " (step " + std::to_string(state.step) + ")");
      }
    }
    offset += g.size();
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  offset = 0;
  for (DenseNet* net : params.nets()) {
    auto p = net->params();
    const auto g = net->grads();
    for (std::size_t k = 0; k < p.size(); ++k) {
      double& m = state.m[offset + k];
      double& v = state.v[offset + k];
      m = state.beta1 * m + (1.0 - state.beta1) * g[k];
      v = state.beta2 * v + (1.0 - state.beta2) * g[k] * g[k];
      p[k] -= state.lr * (m / c1) / (std::sqrt(v / c2) + state.eps);
    }
    offset += p.size();
  }
}

GradCheckResult grad_check(ModelParams& params, const LossClosure& loss, std::size_t n_samples, std::uint64_t seed,
                           double h, double abs_floor) {
  params.zero_grad();
  loss(params);
  const std::size_t total = params.n_params();
  std::vector<double> analytic(total);
  for (std::size_t k = 0; k < total; ++k) analytic[k] = params.grad(k);

  std::vector<std::size_t> indices(total);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  indices.resize(std::min(n_samples, total));

  GradCheckResult result;
  for (std::size_t idx : indices) {
    double& p = params.param(idx);
    const double saved = p;
    p = saved + h;
    params.zero_grad();
    const double up = loss(params);
    p = saved - h;
    params.zero_grad();
    const double down = loss(params);
    p = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[idx];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), abs_floor});
    if (err >= result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = idx;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
    ++result.n_checked;
  }
  params.zero_grad();
  loss(params);
  return result;
}

}  // namespace acvae
