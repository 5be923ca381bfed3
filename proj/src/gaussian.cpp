#include "acvae/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acvae/error.hpp"

namespace acvae {

namespace {

double safe_log(double x) { return std::log(std::max(x, kNumericFloor)); }

void check_dims(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw InputError(std::string(what) + " has dimension " + std::to_string(got) + ", expected " +
                     std::to_string(expected));
  }
}

gauss1d::PairStats stats_at(const PairGaussian& q, std::size_t k) {
  return {q.mean_i[k], q.mean_j[k], q.std_i[k], q.std_j[k], q.rho[k]};
}

}  // namespace

void DiagGaussian::validate() const {
  check_dims(mean.size(), std.size(), "std");
  for (double s : std) {
    if (!(s > 0.0)) throw InputError("standard deviation must be positive");
  }
}

DiagGaussian DiagGaussian::standard(std::size_t d) {
  return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
}

void PairGaussian::validate() const {
  const std::size_t d = rho.size();
  check_dims(d, mean_i.size(), "mean_i");
  check_dims(d, mean_j.size(), "mean_j");
  check_dims(d, std_i.size(), "std_i");
  check_dims(d, std_j.size(), "std_j");
  for (std::size_t k = 0; k < d; ++k) {
    if (!(std_i[k] > 0.0) || !(std_j[k] > 0.0)) throw InputError("standard deviation must be positive");
    if (!(std::abs(rho[k]) < 1.0)) throw InputError("correlation must lie in (-1, 1)");
  }
}

PairGaussian PairGaussian::independent(const DiagGaussian& a, const DiagGaussian& b) {
  check_dims(a.dim(), b.dim(), "second marginal");
  return {a.mean, b.mean, a.std, b.std, std::vector<double>(a.dim(), 0.0)};
}

PairGaussian PairGaussian::prior(std::size_t d, double tau) {
  return {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), std::vector<double>(d, 1.0),
          std::vector<double>(d, 1.0), std::vector<double>(d, tau)};
}

void PriorSpec::validate() const {
  if (!(std::abs(tau) < 1.0)) throw InputError("prior correlation tau must lie in (-1, 1)");
}

namespace gauss1d {

double kl_singleton(double mean, double std) {
  return 0.5 * (std * std + mean * mean - 1.0 - 2.0 * safe_log(std));
}

void kl_singleton_grad(double mean, double std, double& d_mean, double& d_std) {
  d_mean = mean;
  d_std = std - 1.0 / std::max(std, kNumericFloor);
}

// KL( N(m, S) || N(0, P) ) with S = [[a^2, rho a b], [rho a b, b^2]] and
// P = [[1, tau], [tau, 1]]:
//   1/2 [ tr(P^-1 S) + m' P^-1 m - 2 + log det P - log det S ].
double kl_pair(const PairStats& q, double tau) {
  const double one_minus_tau2 = std::max(1.0 - tau * tau, kNumericFloor);
  const double s = 1.0 / one_minus_tau2;
  const double a = q.std_i;
  const double b = q.std_j;
  const double quad = a * a + b * b - 2.0 * tau * q.rho * a * b + q.mean_i * q.mean_i + q.mean_j * q.mean_j -
                      2.0 * tau * q.mean_i * q.mean_j;
  return 0.5 * (s * quad - 2.0 + std::log(one_minus_tau2) - safe_log(1.0 - q.rho * q.rho) - 2.0 * safe_log(a) -
                2.0 * safe_log(b));
}

PairPartials kl_pair_grad(const PairStats& q, double tau) {
  const double s = 1.0 / std::max(1.0 - tau * tau, kNumericFloor);
  const double a = q.std_i;
  const double b = q.std_j;
  PairPartials g;
  g.mean_i = s * (q.mean_i - tau * q.mean_j);
  g.mean_j = s * (q.mean_j - tau * q.mean_i);
  g.std_i = s * (a - tau * q.rho * b) - 1.0 / std::max(a, kNumericFloor);
  g.std_j = s * (b - tau * q.rho * a) - 1.0 / std::max(b, kNumericFloor);
  g.rho = -s * tau * a * b + q.rho / std::max(1.0 - q.rho * q.rho, kNumericFloor);
  return g;
}

// The log-std terms of the pair KL cancel against the singleton KLs, leaving
//   1/2 [ s (quad) - (a^2 + b^2 + mi^2 + mj^2) + log(1 - tau^2) - log(1 - rho^2) ].
double edge_mass(const PairStats& q, double tau) {
  const double one_minus_tau2 = std::max(1.0 - tau * tau, kNumericFloor);
  const double s = 1.0 / one_minus_tau2;
  const double a = q.std_i;
  const double b = q.std_j;
  const double diag = a * a + b * b + q.mean_i * q.mean_i + q.mean_j * q.mean_j;
  const double quad = diag - 2.0 * tau * (q.rho * a * b + q.mean_i * q.mean_j);
  return 0.5 * (s * quad - diag + std::log(one_minus_tau2) - safe_log(1.0 - q.rho * q.rho));
}

PairPartials edge_mass_grad(const PairStats& q, double tau) {
  const double s = 1.0 / std::max(1.0 - tau * tau, kNumericFloor);
  const double a = q.std_i;
  const double b = q.std_j;
  PairPartials g;
  g.mean_i = s * (q.mean_i - tau * q.mean_j) - q.mean_i;
  g.mean_j = s * (q.mean_j - tau * q.mean_i) - q.mean_j;
  g.std_i = s * (a - tau * q.rho * b) - a;
  g.std_j = s * (b - tau * q.rho * a) - b;
  g.rho = -s * tau * a * b + q.rho / std::max(1.0 - q.rho * q.rho, kNumericFloor);
  return g;
}

}  // namespace gauss1d

double kl_singleton(const DiagGaussian& q) {
  q.validate();
  double total = 0.0;
  for (std::size_t k = 0; k < q.dim(); ++k) total += gauss1d::kl_singleton(q.mean[k], q.std[k]);
  return total;
}

double kl_pair(const PairGaussian& q, const PriorSpec& prior) {
  q.validate();
  prior.validate();
  double total = 0.0;
  for (std::size_t k = 0; k < q.dim(); ++k) total += gauss1d::kl_pair(stats_at(q, k), prior.tau);
  return total;
}

double edge_mass(const PairGaussian& q, const PriorSpec& prior) {
  q.validate();
  prior.validate();
  double total = 0.0;
  for (std::size_t k = 0; k < q.dim(); ++k) total += gauss1d::edge_mass(stats_at(q, k), prior.tau);
  return total;
}

double expected_sq_distance(std::span<const double> mean_i, std::span<const double> mean_j,
                            std::span<const double> std_i, std::span<const double> std_j,
                            std::span<const double> rho) {
  double total = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const double diff = mean_i[k] - mean_j[k];
    total += diff * diff + std_i[k] * std_i[k] + std_j[k] * std_j[k] - 2.0 * rho[k] * std_i[k] * std_j[k];
  }
  return total;
}

double expected_sq_distance(const PairGaussian& q) {
  return expected_sq_distance(q.mean_i, q.mean_j, q.std_i, q.std_j, q.rho);
}

PairGaussian compose_path(std::span<const DiagGaussian> marginals, std::span<const PairGaussian> edge_pairs) {
  if (edge_pairs.empty() || marginals.size() != edge_pairs.size() + 1) {
    throw InputError("compose_path needs k >= 1 edges and k + 1 vertex marginals");
  }
  const std::size_t d = marginals.front().dim();
  constexpr double tol = 1e-6;
  for (std::size_t l = 0; l < edge_pairs.size(); ++l) {
    const PairGaussian& e = edge_pairs[l];
    check_dims(d, e.dim(), "edge pair");
    for (std::size_t k = 0; k < d; ++k) {
      if (std::abs(e.mean_i[k] - marginals[l].mean[k]) > tol || std::abs(e.std_i[k] - marginals[l].std[k]) > tol ||
          std::abs(e.mean_j[k] - marginals[l + 1].mean[k]) > tol ||
          std::abs(e.std_j[k] - marginals[l + 1].std[k]) > tol) {
        throw ConsistencyError("edge " + std::to_string(l) + " disagrees with its vertex marginals");
      }
    }
  }
  if (edge_pairs.size() == 1) return edge_pairs.front();

  std::vector<double> corr(d, 1.0);
  for (const PairGaussian& e : edge_pairs) {
    for (std::size_t k = 0; k < d; ++k) corr[k] = chain_step(corr[k], e.rho[k]);
  }
  return {marginals.front().mean, marginals.back().mean, marginals.front().std, marginals.back().std,
          std::move(corr)};
}

}  // namespace acvae
