#include "acvae/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "acvae/disjoint_set.hpp"
#include "acvae/error.hpp"

namespace acvae {

Graph build_graph(std::size_t n, std::span<const Edge> raw_edges) {
  Graph g;
  g.n_vertices_ = n;
  g.edges_.reserve(raw_edges.size());
  for (const Edge& e : raw_edges) {
    if (e.u >= n || e.v >= n) {
      throw InputError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                       ") has an endpoint outside [0, " + std::to_string(n) + ")");
    }
    if (e.u == e.v) continue;
    g.edges_.push_back(e.u < e.v ? e : Edge{e.v, e.u});
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());

  std::vector<std::size_t> degree(n, 0);
  for (const Edge& e : g.edges_) {
    ++degree[e.u];
    ++degree[e.v];
  }
  g.offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + degree[v];
  g.adjacency_.resize(2 * g.edges_.size());
  g.adjacency_edge_.resize(2 * g.edges_.size());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  // Edges are sorted by (u, v), so filling in edge order leaves every
  // adjacency row sorted as well.
  for (EdgeIndex e = 0; e < g.edges_.size(); ++e) {
    const auto [u, v] = g.edges_[e];
    g.adjacency_[cursor[u]] = v;
    g.adjacency_edge_[cursor[u]++] = e;
  }
  for (EdgeIndex e = 0; e < g.edges_.size(); ++e) {
    const auto [u, v] = g.edges_[e];
    g.adjacency_[cursor[v]] = u;
    g.adjacency_edge_[cursor[v]++] = e;
  }
  for (std::size_t v = 0; v < n; ++v) {
    const auto begin = g.offsets_[v];
    const auto end = g.offsets_[v + 1];
    std::vector<std::pair<Vertex, EdgeIndex>> row;
    row.reserve(end - begin);
    for (auto k = begin; k < end; ++k) row.emplace_back(g.adjacency_[k], g.adjacency_edge_[k]);
    std::sort(row.begin(), row.end());
    for (auto k = begin; k < end; ++k) {
      g.adjacency_[k] = row[k - begin].first;
      g.adjacency_edge_[k] = row[k - begin].second;
    }
  }

  DisjointSet dsu(n);
  for (const Edge& e : g.edges_) dsu.unite(e.u, e.v);
  g.component_.assign(n, 0);
  std::vector<std::size_t> label(n, n);
  std::size_t next = 0;
  for (std::size_t v = 0; v < n; ++v) {
    const auto root = dsu.find(v);
    if (label[root] == n) label[root] = next++;
    g.component_[v] = static_cast<Vertex>(label[root]);
  }
  g.n_components_ = next;
  return g;
}

std::span<const Vertex> Graph::neighbors(Vertex v) const {
  if (v >= n_vertices_) throw InputError("vertex out of range");
  return std::span<const Vertex>(adjacency_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
}

std::span<const EdgeIndex> Graph::incident_edges(Vertex v) const {
  if (v >= n_vertices_) throw InputError("vertex out of range");
  return std::span<const EdgeIndex>(adjacency_edge_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
}

std::optional<EdgeIndex> Graph::find_edge(Vertex a, Vertex b) const {
  if (a >= n_vertices_ || b >= n_vertices_ || a == b) return std::nullopt;
  const Edge key = a < b ? Edge{a, b} : Edge{b, a};
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return std::nullopt;
  return static_cast<EdgeIndex>(it - edges_.begin());
}

double MasWeights::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

bool MasWeights::is_integral() const {
  return std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0 || x == 1.0; });
}

void check_mas_invariants(const Graph& g, const MasWeights& w, double tol) {
  if (w.values.size() != g.n_edges()) throw ConsistencyError("weight vector not aligned with edges");
  for (double x : w.values) {
    if (!(x >= -tol && x <= 1.0 + tol)) throw ConsistencyError("MAS weight outside [0,1]: " + std::to_string(x));
  }
  const double expected = static_cast<double>(g.n_vertices() - g.n_components());
  if (std::abs(w.sum() - expected) > tol) {
    throw ConsistencyError("MAS weights sum to " + std::to_string(w.sum()) + ", expected " +
                           std::to_string(expected));
  }
}

SpanningForest::SpanningForest(const Graph& g, std::vector<EdgeIndex> edge_indices)
    : n_graph_edges_(g.n_edges()), edge_indices_(std::move(edge_indices)) {
  std::sort(edge_indices_.begin(), edge_indices_.end());
  const std::size_t n = g.n_vertices();
  if (edge_indices_.size() != n - g.n_components()) {
    throw InputError("spanning forest needs " + std::to_string(n - g.n_components()) + " edges, got " +
                     std::to_string(edge_indices_.size()));
  }
  DisjointSet dsu(n);
  std::vector<std::size_t> degree(n, 0);
  for (EdgeIndex e : edge_indices_) {
    if (e >= g.n_edges()) throw InputError("forest edge index out of range");
    const auto [u, v] = g.edge(e);
    if (!dsu.unite(u, v)) throw InputError("forest edge set contains a cycle");
    ++degree[u];
    ++degree[v];
  }
  arcs_offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) arcs_offsets_[v + 1] = arcs_offsets_[v] + degree[v];
  arcs_.resize(2 * edge_indices_.size());
  std::vector<std::size_t> cursor(arcs_offsets_.begin(), arcs_offsets_.end() - 1);
  for (EdgeIndex e : edge_indices_) {
    const auto [u, v] = g.edge(e);
    arcs_[cursor[u]++] = Arc{v, e};
    arcs_[cursor[v]++] = Arc{u, e};
  }
}

std::span<const SpanningForest::Arc> SpanningForest::arcs(Vertex v) const {
  if (v >= n_vertices()) throw InputError("vertex out of range");
  return std::span<const Arc>(arcs_).subspan(arcs_offsets_[v], arcs_offsets_[v + 1] - arcs_offsets_[v]);
}

bool SpanningForest::contains(EdgeIndex e) const {
  return std::binary_search(edge_indices_.begin(), edge_indices_.end(), e);
}

MasWeights SpanningForest::indicator() const {
  MasWeights w{std::vector<double>(n_graph_edges_, 0.0)};
  for (EdgeIndex e : edge_indices_) w.values[e] = 1.0;
  return w;
}

SpanningForest min_spanning_forest(const Graph& g, std::span<const double> edge_costs, Sense sense) {
  if (edge_costs.size() != g.n_edges()) {
    throw InputError("edge cost vector has " + std::to_string(edge_costs.size()) + " entries for " +
                     std::to_string(g.n_edges()) + " edges");
  }
  std::vector<EdgeIndex> order(g.n_edges());
  std::iota(order.begin(), order.end(), EdgeIndex{0});
  const double sign = sense == Sense::min ? 1.0 : -1.0;
  std::stable_sort(order.begin(), order.end(), [&](EdgeIndex a, EdgeIndex b) {
    return sign * edge_costs[a] < sign * edge_costs[b];
  });
  DisjointSet dsu(g.n_vertices());
  std::vector<EdgeIndex> chosen;
  chosen.reserve(g.n_vertices() - g.n_components());
  for (EdgeIndex e : order) {
    const auto [u, v] = g.edge(e);
    if (dsu.unite(u, v)) chosen.push_back(e);
  }
  return SpanningForest(g, std::move(chosen));
}

MasWeights uniform_mas_weights(const Graph& g) {
  if (g.n_vertices() == 0) throw InputError("uniform_mas_weights needs a nonempty graph");
  MasWeights w{std::vector<double>(g.n_edges(), 0.0)};

  std::vector<std::vector<Vertex>> members(g.n_components());
  for (Vertex v = 0; v < g.n_vertices(); ++v) members[g.component_id(v)].push_back(v);
  std::vector<std::size_t> local(g.n_vertices(), 0);
  for (const auto& comp : members) {
    for (std::size_t k = 0; k < comp.size(); ++k) local[comp[k]] = k;
  }

  for (const auto& comp : members) {
    const auto m = static_cast<Eigen::Index>(comp.size());
    if (m < 2) continue;
    Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(m, m);
    for (Vertex v : comp) {
      for (Vertex u : g.neighbors(v)) {
        laplacian(local[v], local[u]) -= 1.0;
        laplacian(local[v], local[v]) += 1.0;
      }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(laplacian);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double cutoff = 1e-9 * std::max(1.0, lambda.maxCoeff());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      if (lambda(k) > cutoff) inv(k) = 1.0 / lambda(k);
    }
    const Eigen::MatrixXd pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    for (Vertex v : comp) {
      for (std::size_t k = 0; k < g.neighbors(v).size(); ++k) {
        const Vertex u = g.neighbors(v)[k];
        if (u < v) continue;
        const auto a = static_cast<Eigen::Index>(local[v]);
        const auto b = static_cast<Eigen::Index>(local[u]);
        const double r = pinv(a, a) + pinv(b, b) - 2.0 * pinv(a, b);
        w.values[g.incident_edges(v)[k]] = std::clamp(r, 0.0, 1.0);
      }
    }
  }
  return w;
}

namespace {

struct ForestEnumerator {
  const Graph& g;
  std::size_t target;
  std::size_t cap;
  std::vector<SpanningForest> out;
  std::vector<EdgeIndex> chosen;

  static std::size_t root(const std::vector<std::size_t>& parent, std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  }

  void recurse(EdgeIndex next, const std::vector<std::size_t>& parent) {
    if (chosen.size() == target) {
      if (out.size() >= cap) {
        throw OracleScaleError("spanning forest enumeration exceeded cap of " + std::to_string(cap));
      }
      out.emplace_back(g, chosen);
      return;
    }
    if (chosen.size() + (g.n_edges() - next) < target) return;
    const auto [u, v] = g.edge(next);
    const auto ru = root(parent, u);
    const auto rv = root(parent, v);
    if (ru != rv) {
      auto merged = parent;
      merged[ru] = rv;
      chosen.push_back(next);
      recurse(next + 1, merged);
      chosen.pop_back();
    }
    recurse(next + 1, parent);
  }
};

}  // namespace

std::vector<SpanningForest> enumerate_spanning_forests(const Graph& g, std::size_t cap) {
  ForestEnumerator en{g, g.n_vertices() - g.n_components(), cap, {}, {}};
  std::vector<std::size_t> parent(g.n_vertices());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  en.recurse(0, parent);
  return std::move(en.out);
}

MasWeights soft_update(const MasWeights& w, const SpanningForest& target, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("soft_update step must lie in (0, 1]");
  if (w.values.size() != target.n_graph_edges()) throw InputError("weights and forest refer to different graphs");
  MasWeights out{std::vector<double>(w.values.size())};
  for (EdgeIndex e = 0; e < w.values.size(); ++e) {
    const double hit = target.contains(e) ? 1.0 : 0.0;
    out.values[e] = (1.0 - alpha) * w.values[e] + alpha * hit;
  }
  return out;
}

MasWeights random_mas_init(const Graph& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> costs(g.n_edges());
  for (double& c : costs) c = unif(rng);
  return min_spanning_forest(g, costs, Sense::min).indicator();
}

std::optional<std::vector<Vertex>> path_between(const SpanningForest& f, Vertex i, Vertex j) {
  const std::size_t n = f.n_vertices();
  if (i >= n || j >= n) throw InputError("vertex out of range");
  if (i == j) return std::vector<Vertex>{i};
  constexpr Vertex kUnseen = static_cast<Vertex>(-1);
  std::vector<Vertex> parent(n, kUnseen);
  parent[i] = i;
  std::vector<Vertex> stack{i};
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    if (v == j) break;
    for (const auto& arc : f.arcs(v)) {
      if (parent[arc.to] == kUnseen) {
        parent[arc.to] = v;
        stack.push_back(arc.to);
      }
    }
  }
  if (parent[j] == kUnseen) return std::nullopt;
  std::vector<Vertex> path{j};
  for (Vertex v = j; v != i;) {
    v = parent[v];
    path.push_back(v);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace acvae
