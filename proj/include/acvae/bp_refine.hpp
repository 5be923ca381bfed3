#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "acvae/gaussian.hpp"
#include "acvae/graph.hpp"
#include "acvae/neural.hpp"
#include "acvae/objective.hpp"

namespace acvae {

// Trained posteriors restricted to a single maximal acyclic subgraph. Pairwise
// marginals between vertices that are not forest neighbors are obtained by
// marginalizing the tree-structured joint along the unique path.
class RefinedMarginals {
 public:
  // edge_pairs[k] is the pairwise posterior of forest.edge_indices()[k],
  // oriented as (g.edge(e).u, g.edge(e).v). Throws ConsistencyError when an
  // edge pair disagrees with its vertex marginals beyond 1e-6.
  RefinedMarginals(const Graph& g, SpanningForest forest, std::vector<DiagGaussian> vertex_marginals,
                   std::vector<PairGaussian> edge_pairs);

  // Builds the caches from a trained model. The weights must be the 0/1
  // indicator of a spanning forest; fractional weights are rejected with
  // InputError.
  static RefinedMarginals from_model(const Graph& g, const MasWeights& w, const ModelParams& params,
                                     const FeatureMatrix& x);
  static RefinedMarginals from_model(const Graph& g, const SpanningForest& forest, const ModelParams& params,
                                     const FeatureMatrix& x);

  const SpanningForest& forest() const noexcept { return forest_; }
  const DiagGaussian& vertex_marginal(Vertex v) const { return vertices_.at(v); }
  // Pair oriented from a to b for forest edge e = (a, b) or (b, a).
  PairGaussian oriented_edge_pair(EdgeIndex e, Vertex from) const;

  std::size_t n_vertices() const noexcept { return vertices_.size(); }

 private:
  friend PairGaussian refine_pair(const RefinedMarginals& rm, Vertex i, Vertex j);
  friend Eigen::MatrixXd all_pairs_distances(const RefinedMarginals& rm, std::span<const Vertex> sources,
                                             std::span<const Vertex> candidates);

  std::vector<Edge> graph_edges_;
  SpanningForest forest_;
  std::vector<DiagGaussian> vertices_;
  std::vector<PairGaussian> edge_pairs_;      // indexed by graph edge index
  std::vector<std::size_t> edge_slot_;         // graph edge -> slot, or npos
};

// Refined pairwise marginal between i and j (oriented i, j). Vertices in
// different trees get the independent pair. Throws InputError when i == j.
PairGaussian refine_pair(const RefinedMarginals& rm, Vertex i, Vertex j);

// Expected squared distance under the refined marginal for every (source,
// candidate) pair, one traversal per source. Entry (s, c) is 0 when
// sources[s] == candidates[c].
Eigen::MatrixXd all_pairs_distances(const RefinedMarginals& rm, std::span<const Vertex> sources,
                                    std::span<const Vertex> candidates);

// n x n table over all vertices.
Eigen::MatrixXd all_pairs_distances(const RefinedMarginals& rm);

}  // namespace acvae
