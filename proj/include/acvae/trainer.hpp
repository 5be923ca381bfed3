#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "acvae/eval.hpp"
#include "acvae/graph.hpp"
#include "acvae/neural.hpp"
#include "acvae/objective.hpp"

namespace acvae {

struct TrainConfig {
  Mode mode = Mode::acvae_saddle;
  std::size_t latent_dim = 10;
  std::size_t hidden_encoder = 30;  // h1, also the decoder's hidden width
  std::size_t hidden_corr = 30;     // h2
  double tau = 0.99;
  double gamma = 100.0;
  double alpha = 0.1;
  double lr = 1e-3;
  std::size_t batch_vertices = 64;   // B1
  std::size_t batch_edges = 256;     // B2, also the negative batch size
  std::size_t epochs = 300;
  std::size_t eval_every = 5;
  std::uint64_t seed = 0;
  std::optional<Sense> mst_sense;    // overrides the mode's default
  std::size_t mc_samples = 1;

  // Throws InputError on out-of-range values.
  void validate() const;
  Sense effective_sense() const;
};

// Spanning-forest sense used by the weight update of each ACVAE mode.
Sense default_sense(Mode mode);

struct BestRecord {
  bool valid = false;
  double train_objective = 0.0;
  double train_ncrr = 0.0;
  double test_ncrr = 0.0;
  double test_ncrr_unrefined = 0.0;
  std::size_t epoch = 0;
};

// Accepts the snapshot when there is no record yet or when both the train
// objective and the train NCRR strictly improve. Returns whether it did.
bool checkpoint_rule(BestRecord& best, double train_objective, double train_ncrr, double test_ncrr,
                     double test_ncrr_unrefined = 0.0, std::size_t epoch = 0);

struct MetricRecord {
  std::size_t epoch = 0;
  std::uint64_t step = 0;
  Mode mode = Mode::vae;
  LossBreakdown train_loss;  // full-data objective without the negative term
  double train_ncrr = 0.0;
  double test_ncrr = 0.0;
  double test_ncrr_unrefined = 0.0;  // ACVAE only; equals test_ncrr otherwise
  double w_sum = 0.0;
  std::size_t forest_edit_distance = 0;  // edges that changed at the last weight update
  bool accepted = false;
};

struct PiUpdateResult {
  MasWeights weights;
  SpanningForest forest;
  std::vector<double> masses;
};

// Closed-form masses for every edge, the forest of the given sense, and the
// soft update towards its indicator.
PiUpdateResult pi_update(const ModelParams& params, const FeatureMatrix& x, const Graph& g, const MasWeights& w,
                         const PriorSpec& prior, Sense sense, double alpha);

struct TrainState {
  ModelParams params;
  AdamState adam;
  MasWeights w;                         // current (possibly fractional) weights
  std::optional<SpanningForest> forest; // last selected forest (ACVAE modes)
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  BestRecord best;
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, const FeatureMatrix& x, const SplitDataset& split);

  // One pass over the train edges (or vertices for mode vae) of Adam steps.
  void run_epoch();
  // Weight update for the ACVAE modes; no-op otherwise. Returns the number
  // of forest edges that changed.
  std::size_t update_weights();
  MetricRecord evaluate();
  // Full schedule; calls on_record after every evaluation.
  std::vector<MetricRecord> run(const std::function<void(const MetricRecord&)>& on_record = {});

  // Rounded 0/1 weights of the last selected forest (ACVAE), the current
  // weights otherwise.
  MasWeights final_weights() const;
  DistanceTable distances(bool refine = true) const;

  const TrainConfig& config() const noexcept { return cfg_; }
  const TrainState& state() const noexcept { return state_; }
  TrainState& state() noexcept { return state_; }
  // Parameters as of the last evaluation that produced a finite objective.
  const ModelParams& last_good() const noexcept { return last_good_; }

 private:
  LossBreakdown take_step(const BatchSpec& batch);

  TrainConfig cfg_;
  const FeatureMatrix& x_;
  const SplitDataset& split_;
  ObjectiveOptions opts_;
  TrainState state_;
  ModelParams last_good_;
  std::mt19937_64 rng_;
  std::size_t last_edit_distance_ = 0;
};

struct TrainResult {
  TrainState state;
  std::vector<MetricRecord> log;
};

TrainResult train(const TrainConfig& cfg, const FeatureMatrix& x, const SplitDataset& split,
                  const std::function<void(const MetricRecord&)>& on_record = {});

}  // namespace acvae
