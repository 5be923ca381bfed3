#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Sparse>

#include "acvae/graph.hpp"
#include "acvae/objective.hpp"

namespace acvae {

using SparseFeatures = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Graph plus a nonnegative n x D feature matrix; vertex_ids[i] is the external
// label of vertex i.
struct Dataset {
  Graph graph;
  SparseFeatures features;
  std::vector<std::string> vertex_ids;

  std::size_t n_vertices() const noexcept { return graph.n_vertices(); }
  std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(features.cols()); }
  // Throws InputError when the invariants fail.
  void validate() const;
  FeatureMatrix dense_features() const;
};

struct EdgeListOptions {
  // Keep an edge only when both u->v and v->u appear in the file.
  bool bidirectional_only = false;
};

// Edge list: tab- or whitespace-separated "u v" per line, '#' comments. A line
// with a single id declares a vertex without edges. External ids are mapped
// to dense indices in order of first appearance.
struct EdgeList {
  std::vector<std::string> vertex_ids;
  std::vector<Edge> edges;
};
EdgeList read_edge_list(const std::filesystem::path& path, const EdgeListOptions& opts = {});
// Reads edges whose ids must already be in `index`; unknown ids are errors.
std::vector<Edge> read_edges_with_ids(const std::filesystem::path& path,
                                      const std::unordered_map<std::string, Vertex>& index);
// Writes every vertex id (one per line, index order) followed by the edges.
void write_edge_list(const std::filesystem::path& path, std::span<const std::string> vertex_ids,
                     std::span<const Edge> edges);

// Features: sparse triplets "node<TAB>index<TAB>value" or a dense CSV whose
// header starts with "node". Referencing an unknown node is an error that
// reports the offending line.
SparseFeatures read_features(const std::filesystem::path& path,
                             const std::unordered_map<std::string, Vertex>& index);
void write_features(const std::filesystem::path& path, const SparseFeatures& features,
                    std::span<const std::string> vertex_ids);

Dataset load_dataset(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                     const EdgeListOptions& opts = {});
void save_dataset(const Dataset& ds, const std::filesystem::path& edge_path,
                  const std::filesystem::path& feature_path);

std::unordered_map<std::string, Vertex> id_index(std::span<const std::string> vertex_ids);

struct SyntheticSpec {
  std::size_t n_vertices = 300;
  std::size_t n_clusters = 6;
  double p_intra = 0.15;
  double p_inter = 0.002;
  std::size_t vocab_size = 200;
  std::size_t words_per_vertex = 30;
  double topic_strength = 0.25; // fraction of words drawn from the cluster topic
  std::size_t topic_words = 20; // size of each cluster's topic vocabulary
  std::uint64_t seed = 0;

  void validate() const;
};

// Planted-partition graph with bag-of-words counts drawn from a mixture of a
// uniform background and a per-cluster topic.
Dataset generate_synthetic(const SyntheticSpec& spec);
std::vector<std::size_t> synthetic_clusters(const SyntheticSpec& spec);

// The fixed benchmark used for the mode comparison: 300 vertices, 6
// clusters, weak topic signal so that the graph carries most of the cluster
// structure.
SyntheticSpec benchmark_spec();

// tf * (ln((1 + n) / (1 + df)) + 1), rows L2-normalized.
SparseFeatures tfidf(const SparseFeatures& counts);

}  // namespace acvae
