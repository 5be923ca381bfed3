#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acvae/eval.hpp"
#include "acvae/graph.hpp"
#include "acvae/neural.hpp"
#include "acvae/trainer.hpp"

namespace acvae {

// Dense matrix file: 8-byte magic "ACVMAT01", u64 rows, u64 cols, then
// rows * cols little-endian f64 in row-major order.
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

// Named-array bundle: magic "ACVBNDL1", u32 version, u32 metadata length,
// metadata bytes (key=value lines), u32 count, then per array u32 name
// length, name bytes, u64 rows, u64 cols, row-major f64 data.
struct NamedArray {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
};
struct ArrayBundle {
  std::string metadata;
  std::map<std::string, NamedArray> arrays;
};

void write_bundle(const std::filesystem::path& path, const ArrayBundle& bundle);
ArrayBundle read_bundle(const std::filesystem::path& path);

// Everything needed to evaluate or export a trained model.
struct Checkpoint {
  TrainConfig config;
  std::size_t feature_dim = 0;
  ModelParams params;
  MasWeights weights;                    // weights at save time
  std::vector<EdgeIndex> forest_edges;   // ACVAE forest, indices into the train graph
  std::size_t epoch = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// One JSON object per line.
std::string metric_json(const MetricRecord& rec);
void append_metrics(std::ostream& out, const MetricRecord& rec);

// Ranking report as TSV: one row per vertex, then a "# mean_ncrr" footer.
void write_ranking(std::ostream& out, const RankingReport& report, const std::vector<std::string>& vertex_ids);

}  // namespace acvae
