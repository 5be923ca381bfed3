#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace acvae {

// Floor applied to log and division arguments.
inline constexpr double kNumericFloor = 1e-12;

// Diagonal normal N(mean, diag(std^2)).
struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t dim() const noexcept { return mean.size(); }
  // Throws InputError on mismatched sizes or non-positive std.
  void validate() const;

  static DiagGaussian standard(std::size_t d);
};

// Product over latent dimensions of bivariate normals with per-dimension
// correlation rho. The singleton marginals are (mean_i, std_i) and
// (mean_j, std_j) by construction.
struct PairGaussian {
  std::vector<double> mean_i;
  std::vector<double> mean_j;
  std::vector<double> std_i;
  std::vector<double> std_j;
  std::vector<double> rho;

  std::size_t dim() const noexcept { return rho.size(); }
  void validate() const;

  DiagGaussian marginal_i() const { return {mean_i, std_i}; }
  DiagGaussian marginal_j() const { return {mean_j, std_j}; }
  PairGaussian swapped() const { return {mean_j, mean_i, std_j, std_i, rho}; }

  static PairGaussian independent(const DiagGaussian& a, const DiagGaussian& b);
  // Zero means, unit stds, correlation tau in every dimension.
  static PairGaussian prior(std::size_t d, double tau);
};

// Parameter-free priors: p0(z_i) = N(0, I) and p0(z_i, z_j) with
// per-dimension correlation tau.
struct PriorSpec {
  double tau = 0.99;
  void validate() const;
};

double kl_singleton(const DiagGaussian& q);
double kl_pair(const PairGaussian& q, const PriorSpec& prior);
// kl_pair minus both singleton KLs; the per-edge coefficient of the MAS
// weight in the ACVAE objective. May be negative.
double edge_mass(const PairGaussian& q, const PriorSpec& prior);
// E ||z_i - z_j||^2.
double expected_sq_distance(const PairGaussian& q);
double expected_sq_distance(std::span<const double> mean_i, std::span<const double> mean_j,
                            std::span<const double> std_i, std::span<const double> std_j,
                            std::span<const double> rho);

// Endpoint pairwise marginal of the chain marginals[0] - ... - marginals[k],
// where edge_pairs[l] couples marginals[l] and marginals[l+1]. The chain is a
// Gaussian Markov chain, so correlations compose by the chain step below.
// Throws ConsistencyError when a pair's marginals disagree with the vertex
// marginals by more than 1e-6.
PairGaussian compose_path(std::span<const DiagGaussian> marginals, std::span<const PairGaussian> edge_pairs);

// Correlation between the chain start and the next vertex, given the
// correlation with the current vertex and the link correlation.
inline double chain_step(double corr_to_current, double link_rho) { return corr_to_current * link_rho; }

// Scalar (single latent dimension) forms and their partial derivatives, used
// by the objective's backward pass.
namespace gauss1d {

struct PairStats {
  double mean_i, mean_j, std_i, std_j, rho;
};

struct PairPartials {
  double mean_i = 0, mean_j = 0, std_i = 0, std_j = 0, rho = 0;
};

double kl_singleton(double mean, double std);
// d/dmean, d/dstd
void kl_singleton_grad(double mean, double std, double& d_mean, double& d_std);

double kl_pair(const PairStats& q, double tau);
PairPartials kl_pair_grad(const PairStats& q, double tau);

double edge_mass(const PairStats& q, double tau);
PairPartials edge_mass_grad(const PairStats& q, double tau);

}  // namespace gauss1d

}  // namespace acvae
