#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace acvae {

using Vertex = std::uint32_t;
using EdgeIndex = std::size_t;

struct Edge {
  Vertex u = 0;
  Vertex v = 0;
  auto operator<=>(const Edge&) const = default;
};

// Undirected simple graph. Edges are stored normalized (u < v), sorted and
// deduplicated, so an edge index is stable for the lifetime of the graph.
class Graph {
 public:
  Graph() = default;

  std::size_t n_vertices() const noexcept { return n_vertices_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  std::size_t n_components() const noexcept { return n_components_; }

  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(EdgeIndex e) const { return edges_.at(e); }

  Vertex component_id(Vertex v) const { return component_.at(v); }
  std::span<const Vertex> component_ids() const noexcept { return component_; }

  // Neighbors of v in ascending order, with the matching edge indices.
  std::span<const Vertex> neighbors(Vertex v) const;
  std::span<const EdgeIndex> incident_edges(Vertex v) const;
  std::size_t degree(Vertex v) const { return neighbors(v).size(); }

  std::optional<EdgeIndex> find_edge(Vertex a, Vertex b) const;
  bool adjacent(Vertex a, Vertex b) const { return find_edge(a, b).has_value(); }

  friend Graph build_graph(std::size_t n, std::span<const Edge> raw_edges);

 private:
  std::size_t n_vertices_ = 0;
  std::size_t n_components_ = 0;
  std::vector<Edge> edges_;
  std::vector<Vertex> component_;
  std::vector<std::size_t> offsets_;  // CSR row starts, size n+1
  std::vector<Vertex> adjacency_;
  std::vector<EdgeIndex> adjacency_edge_;
};

// Drops self-loops, merges (u,v)/(v,u) duplicates and labels connected
// components. Throws InputError when an endpoint is >= n.
Graph build_graph(std::size_t n, std::span<const Edge> raw_edges);

// Per-edge expected appearance of each edge in a random maximal acyclic
// subgraph (spanning forest). Aligned with Graph::edges().
struct MasWeights {
  std::vector<double> values;

  double sum() const;
  bool is_integral() const;
};

// Throws ConsistencyError when a weight leaves [0,1] or the weights do not
// sum to n_vertices - n_components within tol.
void check_mas_invariants(const Graph& g, const MasWeights& w, double tol = 1e-9);

// One spanning tree per connected component of the graph it was built from.
class SpanningForest {
 public:
  struct Arc {
    Vertex to;
    EdgeIndex edge;
  };

  SpanningForest() = default;
  // Validates that edge_indices is acyclic and has n - components edges.
  SpanningForest(const Graph& g, std::vector<EdgeIndex> edge_indices);

  std::size_t n_vertices() const noexcept { return arcs_offsets_.empty() ? 0 : arcs_offsets_.size() - 1; }
  std::size_t n_graph_edges() const noexcept { return n_graph_edges_; }
  std::span<const EdgeIndex> edge_indices() const noexcept { return edge_indices_; }
  std::span<const Arc> arcs(Vertex v) const;
  bool contains(EdgeIndex e) const;

  MasWeights indicator() const;

 private:
  std::size_t n_graph_edges_ = 0;
  std::vector<EdgeIndex> edge_indices_;  // ascending
  std::vector<std::size_t> arcs_offsets_;
  std::vector<Arc> arcs_;
};

enum class Sense { min, max };

// Kruskal per component. Ties are broken by ascending edge index; Sense::max
// negates the costs.
SpanningForest min_spanning_forest(const Graph& g, std::span<const double> edge_costs,
                                   Sense sense = Sense::min);

// Uniform distribution over all maximal acyclic subgraphs: w_e is the
// effective resistance across e in its component, from the pseudoinverse of
// the dense component Laplacian. Cubic in the component size.
MasWeights uniform_mas_weights(const Graph& g);

// Exhaustive list of all maximal acyclic subgraphs. Throws OracleScaleError
// once more than `cap` forests have been found.
std::vector<SpanningForest> enumerate_spanning_forests(const Graph& g, std::size_t cap = 100000);

// (1 - alpha) * w + alpha * indicator(target).
MasWeights soft_update(const MasWeights& w, const SpanningForest& target, double alpha);

// Indicator of the Kruskal forest under i.i.d. uniform random edge costs.
MasWeights random_mas_init(const Graph& g, std::uint64_t seed);

// Unique forest path from i to j (inclusive), or nullopt when the two
// vertices sit in different trees.
std::optional<std::vector<Vertex>> path_between(const SpanningForest& f, Vertex i, Vertex j);

}  // namespace acvae
