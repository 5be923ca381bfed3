#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "acvae/graph.hpp"
#include "acvae/neural.hpp"
#include "acvae/objective.hpp"

namespace acvae {

using DistanceTable = Eigen::MatrixXd;

struct SplitDataset {
  Graph train_graph;
  std::vector<Edge> test_edges;              // normalized (u < v)
  std::vector<std::size_t> heldout_counts;   // test edges incident to each vertex
};

// Each vertex, visited in seeded random order, moves still-unclaimed incident
// edges to the test set until max(1, floor(degree / 20)) of its edges are
// held out. An edge counts toward both endpoints and is only moved while the
// other endpoint is still below its own quota.
SplitDataset split_edges(const Graph& g, std::uint64_t seed);

// Builds a split from explicit train/test edge lists over n vertices.
SplitDataset make_split(std::size_t n, std::span<const Edge> train_edges, std::span<const Edge> test_edges);

struct RankingReport {
  std::vector<double> crr;              // per vertex; 0 where no heldout edge
  std::vector<double> ncrr;             // per vertex; 0 where no heldout edge
  std::vector<std::size_t> heldout;     // t_i
  std::vector<std::size_t> candidates;  // candidate-set size per vertex
  double mean_ncrr = 0.0;               // over vertices with t_i >= 1
  std::size_t n_ranked = 0;
};

// Cumulative reciprocal rank of each vertex's heldout edges among all
// vertices other than itself and its train neighbors (ties count against the
// target), normalized by the ideal value sum_{r=1}^{t_i} 1/r.
// Throws InputError when the table is not n x n or holds a NaN in a needed
// entry.
RankingReport ncrr(const DistanceTable& dist, const SplitDataset& split);

// Train-set ranking: each vertex's train edges are the targets and only the
// vertex itself is excluded from the candidates.
RankingReport train_ncrr(const DistanceTable& dist, const Graph& train_graph);

// Expected squared distances under independent singleton posteriors.
DistanceTable independent_distances(std::span<const DiagGaussian> q);

// Expected squared distances under the pairwise posterior that the
// correlation network assigns to every pair.
DistanceTable pair_posterior_distances(const ModelParams& params, const FeatureMatrix& x);

// Distances used to rank candidates for a trained model:
//   acvae modes: refined marginals along `forest` (or, with refine = false,
//                the forest's pairwise posteriors and independence elsewhere);
//   cvae_corr:   pairwise posterior for every pair;
//   vae, cvae_ind: independence everywhere.
DistanceTable distances_for_mode(Mode mode, const ModelParams& params, const FeatureMatrix& x,
                                 const Graph& train_graph, const SpanningForest* forest, bool refine = true);

}  // namespace acvae
