#include "acvae/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "acvae/error.hpp"

namespace acvae {

CellResult run_cell(const FeatureMatrix& x, const Graph& g, const TrainConfig& cfg, std::uint64_t split_seed) {
  const auto start = std::chrono::steady_clock::now();
  const SplitDataset split = split_edges(g, split_seed);
  Trainer trainer(cfg, x, split);
  const auto log = trainer.run();
  const BestRecord& best = trainer.state().best;
  if (!best.valid || log.empty()) throw TrainingError("training produced no evaluation");

  CellResult cell;
  cell.mode = cfg.mode;
  cell.seed = cfg.seed;
  cell.test_ncrr = best.test_ncrr;
  cell.test_ncrr_unrefined = best.test_ncrr_unrefined;
  cell.best_train_objective = best.train_objective;
  cell.final_train_objective = log.back().train_loss.elbo();
  cell.final_test_ncrr = log.back().test_ncrr;
  cell.best_epoch = best.epoch;
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

std::vector<CellResult> run_matrix(const FeatureMatrix& x, const Graph& g, const TrainConfig& base,
                                   std::span<const Mode> modes, std::span<const std::uint64_t> seeds,
                                   const std::function<void(const CellResult&)>& on_cell) {
  std::vector<CellResult> cells;
  for (std::uint64_t seed : seeds) {
    for (Mode mode : modes) {
      TrainConfig cfg = base;
      cfg.mode = mode;
      cfg.seed = seed;
      cells.push_back(run_cell(x, g, cfg, seed));
      if (on_cell) on_cell(cells.back());
    }
  }
  return cells;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.stderr_ = s.stddev / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

std::vector<double> collect(std::span<const CellResult> cells, Mode mode, double CellResult::*field) {
  std::vector<double> out;
  for (const CellResult& c : cells) {
    if (c.mode == mode) out.push_back(c.*field);
  }
  return out;
}

std::string format_table(std::span<const CellResult> cells) {
  std::string out = "mode            test NCRR            unrefined            n\n";
  for (Mode mode : {Mode::vae, Mode::cvae_ind, Mode::cvae_corr, Mode::acvae_saddle, Mode::acvae_eb}) {
    const auto values = collect(cells, mode, &CellResult::test_ncrr);
    if (values.empty()) continue;
    const Summary s = summarize(values);
    const Summary u = summarize(collect(cells, mode, &CellResult::test_ncrr_unrefined));
    char line[160];
    std::snprintf(line, sizeof line, "%-15s %.4f +/- %.4f    %.4f +/- %.4f    %zu\n",
                  std::string(to_string(mode)).c_str(), s.mean, s.stddev, u.mean, u.stddev, s.n);
    out += line;
  }
  return out;
}

}  // namespace acvae
