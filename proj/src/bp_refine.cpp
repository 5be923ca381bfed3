#include "acvae/bp_refine.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "acvae/error.hpp"

namespace acvae {

namespace {

constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();
constexpr double kMarginalTol = 1e-6;

void check_close(std::span<const double> a, std::span<const double> b, const std::string& what) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > kMarginalTol) throw ConsistencyError(what + " disagrees with its vertex marginal");
  }
}

}  // namespace

RefinedMarginals::RefinedMarginals(const Graph& g, SpanningForest forest, std::vector<DiagGaussian> vertex_marginals,
                                   std::vector<PairGaussian> edge_pairs)
    : graph_edges_(g.edges().begin(), g.edges().end()),
      forest_(std::move(forest)),
      vertices_(std::move(vertex_marginals)),
      edge_pairs_(std::move(edge_pairs)),
      edge_slot_(g.n_edges(), kNoSlot) {
  if (vertices_.size() != g.n_vertices() || forest_.n_vertices() != g.n_vertices()) {
    throw InputError("marginals, forest and graph disagree on the vertex count");
  }
  if (edge_pairs_.size() != forest_.edge_indices().size()) throw InputError("need one pair per forest edge");
  for (const auto& q : vertices_) q.validate();
  for (std::size_t slot = 0; slot < edge_pairs_.size(); ++slot) {
    const EdgeIndex e = forest_.edge_indices()[slot];
    edge_slot_[e] = slot;
    PairGaussian& p = edge_pairs_[slot];
    p.validate();
    const auto [u, v] = g.edge(e);
    const std::string name = "forest edge " + std::to_string(e);
    check_close(p.mean_i, vertices_[u].mean, name);
    check_close(p.std_i, vertices_[u].std, name);
    check_close(p.mean_j, vertices_[v].mean, name);
    check_close(p.std_j, vertices_[v].std, name);
    // Pin the cached marginals to the vertex marginals exactly.
    p.mean_i = vertices_[u].mean;
    p.std_i = vertices_[u].std;
    p.mean_j = vertices_[v].mean;
    p.std_j = vertices_[v].std;
  }
}

RefinedMarginals RefinedMarginals::from_model(const Graph& g, const MasWeights& w, const ModelParams& params,
                                              const FeatureMatrix& x) {
  if (w.values.size() != g.n_edges()) throw InputError("MAS weights not aligned with graph edges");
  if (!w.is_integral()) {
    throw InputError("belief propagation refinement needs 0/1 weights of a single forest, got fractional weights");
  }
  std::vector<EdgeIndex> chosen;
  for (EdgeIndex e = 0; e < g.n_edges(); ++e) {
    if (w.values[e] == 1.0) chosen.push_back(e);
  }
  return from_model(g, SpanningForest(g, std::move(chosen)), params, x);
}

RefinedMarginals RefinedMarginals::from_model(const Graph& g, const SpanningForest& forest, const ModelParams& params,
                                              const FeatureMatrix& x) {
  auto q = encode_all(params, x);
  std::vector<PairGaussian> pairs;
  pairs.reserve(forest.edge_indices().size());
  for (EdgeIndex e : forest.edge_indices()) {
    const auto [u, v] = g.edge(e);
    const Vector logits = correlation_logits(params, x.row(u).transpose(), x.row(v).transpose());
    std::vector<double> rho(params.latent_dim);
    for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = kRhoScale * std::tanh(logits(static_cast<Eigen::Index>(k)));
    pairs.push_back({q[u].mean, q[v].mean, q[u].std, q[v].std, std::move(rho)});
  }
  return RefinedMarginals(g, forest, std::move(q), std::move(pairs));
}

PairGaussian RefinedMarginals::oriented_edge_pair(EdgeIndex e, Vertex from) const {
  if (e >= edge_slot_.size() || edge_slot_[e] == kNoSlot) throw InputError("edge is not in the forest");
  const PairGaussian& p = edge_pairs_[edge_slot_[e]];
  return graph_edges_[e].u == from ? p : p.swapped();
}

PairGaussian refine_pair(const RefinedMarginals& rm, Vertex i, Vertex j) {
  if (i == j) throw InputError("refine_pair needs two distinct vertices");
  const auto path = path_between(rm.forest_, i, j);
  if (!path) return PairGaussian::independent(rm.vertices_[i], rm.vertices_[j]);
  std::vector<DiagGaussian> marginals;
  std::vector<PairGaussian> links;
  marginals.reserve(path->size());
  links.reserve(path->size() - 1);
  for (std::size_t l = 0; l < path->size(); ++l) {
    const Vertex v = (*path)[l];
    marginals.push_back(rm.vertices_[v]);
    if (l + 1 < path->size()) {
      const Vertex next = (*path)[l + 1];
      for (const auto& arc : rm.forest_.arcs(v)) {
        if (arc.to == next) {
          links.push_back(rm.oriented_edge_pair(arc.edge, v));
          break;
        }
      }
    }
  }
  return compose_path(marginals, links);
}

Eigen::MatrixXd all_pairs_distances(const RefinedMarginals& rm, std::span<const Vertex> sources,
                                    std::span<const Vertex> candidates) {
  const std::size_t n = rm.n_vertices();
  std::vector<std::vector<std::size_t>> columns(n);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (candidates[c] >= n) throw InputError("candidate vertex out of range");
    columns[candidates[c]].push_back(c);
  }
  const std::size_t d = n == 0 ? 0 : rm.vertices_.front().dim();
  const std::vector<double> zeros(d, 0.0);
  Eigen::MatrixXd table(static_cast<Eigen::Index>(sources.size()), static_cast<Eigen::Index>(candidates.size()));

  struct Frame {
    Vertex v;
    std::vector<double> corr;  // correlation with the source, per dimension
  };
  std::vector<char> reached(n);
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const Vertex src = sources[s];
    if (src >= n) throw InputError("source vertex out of range");
    const DiagGaussian& qs = rm.vertices_[src];
    std::fill(reached.begin(), reached.end(), 0);
    reached[src] = 1;
    for (std::size_t c : columns[src]) table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) = 0.0;

    std::vector<Frame> stack;
    stack.push_back({src, std::vector<double>(d, 1.0)});
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      for (const auto& arc : rm.forest_.arcs(f.v)) {
        if (reached[arc.to]) continue;
        reached[arc.to] = 1;
        const PairGaussian& link = rm.edge_pairs_[rm.edge_slot_[arc.edge]];
        std::vector<double> corr(d);
        for (std::size_t k = 0; k < d; ++k) corr[k] = chain_step(f.corr[k], link.rho[k]);
        const DiagGaussian& qt = rm.vertices_[arc.to];
        for (std::size_t c : columns[arc.to]) {
          table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) =
              expected_sq_distance(qs.mean, qt.mean, qs.std, qt.std, corr);
        }
        stack.push_back({arc.to, std::move(corr)});
      }
    }
    for (Vertex t = 0; t < n; ++t) {
      if (reached[t]) continue;
      const DiagGaussian& qt = rm.vertices_[t];
      for (std::size_t c : columns[t]) {
        table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) =
            expected_sq_distance(qs.mean, qt.mean, qs.std, qt.std, zeros);
      }
    }
  }
  return table;
}

Eigen::MatrixXd all_pairs_distances(const RefinedMarginals& rm) {
  std::vector<Vertex> all(rm.n_vertices());
  for (Vertex v = 0; v < all.size(); ++v) all[v] = v;
  return all_pairs_distances(rm, all, all);
}

}  // namespace acvae
