#include "acvae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "acvae/bp_refine.hpp"
#include "acvae/error.hpp"

namespace acvae {

SplitDataset split_edges(const Graph& g, std::uint64_t seed) {
  const std::size_t n = g.n_vertices();
  std::mt19937_64 rng(seed);
  std::vector<Vertex> order(n);
  std::iota(order.begin(), order.end(), Vertex{0});
  std::shuffle(order.begin(), order.end(), rng);

  const auto quota = [&](Vertex v) { return std::max<std::size_t>(1, g.degree(v) / 20); };
  std::vector<char> claimed(g.n_edges(), 0);
  std::vector<std::size_t> held(n, 0);
  for (Vertex v : order) {
    if (g.degree(v) == 0 || held[v] >= quota(v)) continue;
    std::vector<EdgeIndex> incident(g.incident_edges(v).begin(), g.incident_edges(v).end());
    std::shuffle(incident.begin(), incident.end(), rng);
    for (EdgeIndex e : incident) {
      if (held[v] >= quota(v)) break;
      const Edge& ed = g.edge(e);
      const Vertex other = ed.u == v ? ed.v : ed.u;
      if (claimed[e] || held[other] >= quota(other)) continue;
      claimed[e] = 1;
      ++held[g.edge(e).u];
      ++held[g.edge(e).v];
    }
  }

  std::vector<Edge> train;
  std::vector<Edge> test;
  for (EdgeIndex e = 0; e < g.n_edges(); ++e) (claimed[e] ? test : train).push_back(g.edge(e));
  return {build_graph(n, train), std::move(test), std::move(held)};
}

SplitDataset make_split(std::size_t n, std::span<const Edge> train_edges, std::span<const Edge> test_edges) {
  SplitDataset split{build_graph(n, train_edges), {}, std::vector<std::size_t>(n, 0)};
  std::set<Edge> seen;
  for (const Edge& raw : test_edges) {
    if (raw.u >= n || raw.v >= n) throw InputError("test edge endpoint out of range");
    if (raw.u == raw.v) continue;
    const Edge e = raw.u < raw.v ? raw : Edge{raw.v, raw.u};
    if (!seen.insert(e).second) continue;
    if (split.train_graph.adjacent(e.u, e.v)) throw InputError("edge appears in both the train and test sets");
    split.test_edges.push_back(e);
    ++split.heldout_counts[e.u];
    ++split.heldout_counts[e.v];
  }
  std::sort(split.test_edges.begin(), split.test_edges.end());
  return split;
}

namespace {

RankingReport rank_targets(const DistanceTable& dist, std::size_t n, const std::vector<std::vector<Vertex>>& targets,
                           const Graph* excluded) {
  if (static_cast<std::size_t>(dist.rows()) != n || static_cast<std::size_t>(dist.cols()) != n) {
    throw InputError("distance table is " + std::to_string(dist.rows()) + "x" + std::to_string(dist.cols()) +
                     ", expected " + std::to_string(n) + "x" + std::to_string(n));
  }
  RankingReport report;
  report.crr.assign(n, 0.0);
  report.ncrr.assign(n, 0.0);
  report.heldout.assign(n, 0);
  report.candidates.assign(n, 0);
  double sum = 0.0;
  std::vector<double> cand;
  for (Vertex i = 0; i < n; ++i) {
    const auto& mine = targets[i];
    report.heldout[i] = mine.size();
    cand.clear();
    for (Vertex k = 0; k < n; ++k) {
      if (k == i || (excluded != nullptr && excluded->adjacent(i, k))) continue;
      const double v = dist(i, k);
      if (std::isnan(v)) throw InputError("distance table has a missing entry at (" + std::to_string(i) + ", " + std::to_string(k) + ")");
      cand.push_back(v);
    }
    report.candidates[i] = cand.size();
    if (mine.empty()) continue;
    std::sort(cand.begin(), cand.end());
    double crr = 0.0;
    double ideal = 0.0;
    for (std::size_t r = 0; r < mine.size(); ++r) {
      const double target = dist(i, mine[r]);
      const auto rank = static_cast<std::size_t>(std::upper_bound(cand.begin(), cand.end(), target) - cand.begin());
      crr += 1.0 / static_cast<double>(std::max<std::size_t>(rank, 1));
      ideal += 1.0 / static_cast<double>(r + 1);
    }
    report.crr[i] = crr;
    report.ncrr[i] = crr / ideal;
    sum += report.ncrr[i];
    ++report.n_ranked;
  }
  report.mean_ncrr = report.n_ranked == 0 ? 0.0 : sum / static_cast<double>(report.n_ranked);
  return report;
}

}  // namespace

RankingReport ncrr(const DistanceTable& dist, const SplitDataset& split) {
  const std::size_t n = split.train_graph.n_vertices();
  std::vector<std::vector<Vertex>> targets(n);
  for (const Edge& e : split.test_edges) {
    if (e.u >= n || e.v >= n) throw InputError("test edge endpoint out of range");
    targets[e.u].push_back(e.v);
    targets[e.v].push_back(e.u);
  }
  return rank_targets(dist, n, targets, &split.train_graph);
}

RankingReport train_ncrr(const DistanceTable& dist, const Graph& train_graph) {
  const std::size_t n = train_graph.n_vertices();
  std::vector<std::vector<Vertex>> targets(n);
  for (Vertex v = 0; v < n; ++v) targets[v].assign(train_graph.neighbors(v).begin(), train_graph.neighbors(v).end());
  return rank_targets(dist, n, targets, nullptr);
}

DistanceTable independent_distances(std::span<const DiagGaussian> q) {
  const auto n = static_cast<Eigen::Index>(q.size());
  DistanceTable table(n, n);
  const std::size_t d = q.empty() ? 0 : q.front().dim();
  const std::vector<double> zeros(d, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    table(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = expected_sq_distance(q[i].mean, q[j].mean, q[i].std, q[j].std, zeros);
      table(i, j) = v;
      table(j, i) = v;
    }
  }
  return table;
}

namespace {

void overwrite_with_pairs(DistanceTable& table, const ModelParams& params, const FeatureMatrix& x,
                          const Graph& g, std::span<const EdgeIndex> edges) {
  for (EdgeIndex e : edges) {
    const auto [u, v] = g.edge(e);
    const double val = expected_sq_distance(encode_pair(params, x.row(u).transpose(), x.row(v).transpose()));
    table(u, v) = val;
    table(v, u) = val;
  }
}

}  // namespace

DistanceTable pair_posterior_distances(const ModelParams& params, const FeatureMatrix& x) {
  const auto n = x.rows();
  const auto d = static_cast<Eigen::Index>(params.latent_dim);
  const auto D = static_cast<Eigen::Index>(params.feature_dim);
  const std::vector<DiagGaussian> q = encode_all(params, x);
  // The correlation net's first layer splits into the blocks acting on each
  // argument, so hidden pre-activations are sums of per-vertex projections.
  const auto w1 = params.corr.w1();
  const Eigen::MatrixXd left = w1.leftCols(D) * x.transpose();
  const Eigen::MatrixXd right = w1.rightCols(D) * x.transpose();
  const auto b1 = params.corr.b1();
  const auto w2 = params.corr.w2();
  const auto b2 = params.corr.b2();

  DistanceTable table(n, n);
  Eigen::VectorXd h_ij, h_ji, u;
  std::vector<double> rho(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    table(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      h_ij = (left.col(i) + right.col(j) + b1).array().tanh();
      h_ji = (left.col(j) + right.col(i) + b1).array().tanh();
      u = 0.5 * ((w2 * h_ij + b2) + (w2 * h_ji + b2));
      for (Eigen::Index k = 0; k < d; ++k) rho[static_cast<std::size_t>(k)] = kRhoScale * std::tanh(u(k));
      const double v = expected_sq_distance(q[i].mean, q[j].mean, q[i].std, q[j].std, rho);
      table(i, j) = v;
      table(j, i) = v;
    }
  }
  return table;
}

DistanceTable distances_for_mode(Mode mode, const ModelParams& params, const FeatureMatrix& x,
                                 const Graph& train_graph, const SpanningForest* forest, bool refine) {
  switch (mode) {
    case Mode::vae:
    case Mode::cvae_ind:
      return independent_distances(encode_all(params, x));
    case Mode::cvae_corr:
      return pair_posterior_distances(params, x);
    case Mode::acvae_saddle:
    case Mode::acvae_eb: {
      if (forest == nullptr) throw InputError("ACVAE distances need the learned forest");
      if (refine) return all_pairs_distances(RefinedMarginals::from_model(train_graph, *forest, params, x));
      DistanceTable table = independent_distances(encode_all(params, x));
      overwrite_with_pairs(table, params, x, train_graph, forest->edge_indices());
      return table;
    }
  }
  throw InputError("unknown mode");
}

}  // namespace acvae
