#pragma once

// Reference computations that share no code path with the library routines
// they check: exhaustive enumeration, numerical quadrature, Monte Carlo,
// dense-matrix transcriptions and brute-force ranking.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acvae/eval.hpp"
#include "acvae/gaussian.hpp"
#include "acvae/graph.hpp"
#include "acvae/neural.hpp"
#include "acvae/objective.hpp"

namespace acvae::oracle {

// Edge-appearance fraction over all maximal acyclic subgraphs.
std::vector<double> enumerated_mas_weights(const Graph& g);
// Optimal total cost over all maximal acyclic subgraphs and every forest
// attaining it (exact comparison).
struct ForestOptimum {
  double cost = 0.0;
  std::vector<std::vector<EdgeIndex>> forests;
};
ForestOptimum optimal_forests(const Graph& g, std::span<const double> costs, Sense sense);

// Erdos-Renyi style graph on 1..max_vertices vertices with at most max_edges
// edges, so enumeration stays small.
Graph random_graph(std::mt19937_64& rng, std::size_t min_vertices, std::size_t max_vertices, std::size_t max_edges);
// Uniformly random labelled tree (random attachment) on n vertices.
Graph random_tree(std::mt19937_64& rng, std::size_t n);

// One-dimensional Gaussians, integrated on a Simpson grid spanning
// +-9 standard deviations.
double quad_kl_singleton(double mean, double std);
double quad_kl_pair(const gauss1d::PairStats& q, double tau);

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};
McEstimate mc_kl_pair(const gauss1d::PairStats& q, double tau, std::size_t n_samples, std::uint64_t seed);

// Endpoint moments of the chain marginal obtained by integrating out every
// interior vertex on a grid. means/stds have k + 1 entries, rhos k.
struct ChainMoments {
  double mean_first = 0.0, mean_last = 0.0, std_first = 0.0, std_last = 0.0, rho = 0.0;
};
ChainMoments quad_chain(std::span<const double> means, std::span<const double> stds, std::span<const double> rhos);

// The objective written out with dense 2d x 2d covariance matrices and
// hand-rolled network forward passes: every vertex, every edge weighted by
// w, and gamma times the mean hinge over all non-adjacent pairs.
double transcribed_objective(const ModelParams& params, const FeatureMatrix& x, const Graph& g,
                             std::span<const double> w, double tau, double gamma, bool correlated,
                             std::uint64_t noise_seed);

// For every target, counts candidates k (k != i, k not a train neighbor)
// with dis(i, k) <= dis(i, target) by direct scanning.
struct BruteRanking {
  std::vector<double> crr;
  std::vector<double> ncrr;
  double mean_ncrr = 0.0;
};
BruteRanking brute_force_ncrr(const DistanceTable& dist, const Graph& train_graph, std::span<const Edge> test_edges);

// Hand-built 7-vertex ranking fixture with ties.
SplitDataset ranking_fixture_split();
DistanceTable ranking_fixture_table();

// Suites behind `acvae oracle` and the acceptance binary.
struct Check {
  std::string name;
  bool passed = false;
  double error = 0.0;      // worst observed discrepancy
  double tolerance = 0.0;
  std::string detail;
};

struct SuiteOptions {
  std::uint64_t seed = 20240601;
  std::size_t n_cases = 60;
};

std::vector<std::string_view> suite_names();
// Throws InputError for unknown names.
std::vector<Check> run_suite(std::string_view name, const SuiteOptions& opts = {});

}  // namespace acvae::oracle
