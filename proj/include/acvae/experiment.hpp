#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "acvae/graph.hpp"
#include "acvae/objective.hpp"
#include "acvae/trainer.hpp"

namespace acvae {

// Outcome of one (mode, seed) training run on a fresh heldout split.
struct CellResult {
  Mode mode = Mode::vae;
  std::uint64_t seed = 0;
  double test_ncrr = 0.0;             // at the accepted checkpoint
  double test_ncrr_unrefined = 0.0;   // same checkpoint, no refinement
  double best_train_objective = 0.0;  // objective of the accepted checkpoint
  double final_train_objective = 0.0; // objective at the last evaluation
  double final_test_ncrr = 0.0;
  std::size_t best_epoch = 0;
  double seconds = 0.0;
};

// Splits g with split_seed, trains cfg (its seed is used for the model) and
// reads off the checkpointed metrics.
CellResult run_cell(const FeatureMatrix& x, const Graph& g, const TrainConfig& cfg, std::uint64_t split_seed);

// Every mode on every seed; run r uses seed seeds[r] for both the split and
// the model, so modes are compared on identical splits.
std::vector<CellResult> run_matrix(const FeatureMatrix& x, const Graph& g, const TrainConfig& base,
                                   std::span<const Mode> modes, std::span<const std::uint64_t> seeds,
                                   const std::function<void(const CellResult&)>& on_cell = {});

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;   // sample standard deviation
  double stderr_ = 0.0;  // stddev / sqrt(n)
  std::size_t n = 0;
};
Summary summarize(std::span<const double> values);

// Values of `field` for the cells of one mode, in seed order.
std::vector<double> collect(std::span<const CellResult> cells, Mode mode, double CellResult::*field);

// "mode  mean ± std  (n)" rows for the test NCRR of each mode present.
std::string format_table(std::span<const CellResult> cells);

}  // namespace acvae
