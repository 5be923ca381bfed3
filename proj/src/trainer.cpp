#include "acvae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "acvae/error.hpp"

namespace acvae {

namespace {

// Offsets that decorrelate the seeded streams derived from TrainConfig::seed.
constexpr std::uint64_t kInitStream = 0x1000;
constexpr std::uint64_t kWeightStream = 0x2000;
constexpr std::uint64_t kBatchStream = 0x3000;
constexpr std::uint64_t kNoiseStream = 0x4000;
constexpr std::uint64_t kEvalNoise = 0x5000;

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.reconstruction) && std::isfinite(l.singleton_kl) && std::isfinite(l.pairwise_penalty) &&
         std::isfinite(l.negative_sampling) && std::isfinite(l.total);
}

std::string describe(const LossBreakdown& l) {
  return "reconstruction=" + std::to_string(l.reconstruction) + " singleton_kl=" + std::to_string(l.singleton_kl) +
         " pairwise=" + std::to_string(l.pairwise_penalty) + " negative=" + std::to_string(l.negative_sampling);
}

}  // namespace

void TrainConfig::validate() const {
  if (latent_dim == 0 || hidden_encoder == 0 || hidden_corr == 0) throw InputError("network sizes must be positive");
  if (batch_vertices == 0 || batch_edges == 0) throw InputError("batch sizes must be positive");
  if (epochs == 0 || eval_every == 0) throw InputError("epochs and eval_every must be positive");
  if (mc_samples == 0) throw InputError("mc_samples must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in (0, 1]");
  if (!(std::abs(tau) < 1.0)) throw InputError("tau must lie in (-1, 1)");
  if (!(gamma >= 0.0)) throw InputError("gamma must be nonnegative");
  if (!(lr > 0.0)) throw InputError("learning rate must be positive");
}

Sense default_sense(Mode mode) {
  // Saddle mode follows the alternating algorithm as stated: a minimum
  // spanning forest under the edge masses. Empirical Bayes takes the other
  // sense. Both are overridable through TrainConfig::mst_sense.
  return mode == Mode::acvae_eb ? Sense::max : Sense::min;
}

Sense TrainConfig::effective_sense() const { return mst_sense.value_or(default_sense(mode)); }

bool checkpoint_rule(BestRecord& best, double train_objective, double train_ncrr, double test_ncrr,
                     double test_ncrr_unrefined, std::size_t epoch) {
  if (best.valid && !(train_objective > best.train_objective && train_ncrr > best.train_ncrr)) return false;
  best = {true, train_objective, train_ncrr, test_ncrr, test_ncrr_unrefined, epoch};
  return true;
}

PiUpdateResult pi_update(const ModelParams& params, const FeatureMatrix& x, const Graph& g, const MasWeights& w,
                         const PriorSpec& prior, Sense sense, double alpha) {
  std::vector<double> masses = edge_masses(params, x, g, prior, true);
  SpanningForest forest = min_spanning_forest(g, masses, sense);
  MasWeights next = soft_update(w, forest, alpha);
  return {std::move(next), std::move(forest), std::move(masses)};
}

Trainer::Trainer(TrainConfig cfg, const FeatureMatrix& x, const SplitDataset& split)
    : cfg_(cfg), x_(x), split_(split), rng_(cfg.seed + kBatchStream) {
  cfg_.validate();
  const Graph& g = split_.train_graph;
  if (static_cast<std::size_t>(x_.rows()) != g.n_vertices() || g.n_vertices() == 0) {
    throw InputError("features and graph disagree on the vertex count (or the graph is empty)");
  }
  opts_ = objective_options_for(cfg_.mode, PriorSpec{cfg_.tau}, cfg_.gamma, cfg_.mc_samples);
  state_.params = ModelParams::create(static_cast<std::size_t>(x_.cols()), cfg_.latent_dim, cfg_.hidden_encoder,
                                      cfg_.hidden_corr, cfg_.seed + kInitStream);
  state_.adam.lr = cfg_.lr;
  switch (cfg_.mode) {
    case Mode::vae:
      state_.w.values.assign(g.n_edges(), 0.0);
      break;
    case Mode::cvae_ind:
    case Mode::cvae_corr:
      state_.w = uniform_mas_weights(g);
      break;
    case Mode::acvae_saddle:
    case Mode::acvae_eb: {
      state_.w = random_mas_init(g, cfg_.seed + kWeightStream);
      std::vector<EdgeIndex> chosen;
      for (EdgeIndex e = 0; e < g.n_edges(); ++e) {
        if (state_.w.values[e] == 1.0) chosen.push_back(e);
      }
      state_.forest = SpanningForest(g, std::move(chosen));
      break;
    }
  }
  last_good_ = state_.params;
}

LossBreakdown Trainer::take_step(const BatchSpec& batch) {
  const NoiseStream noise(cfg_.seed + kNoiseStream, state_.step);
  const LossBreakdown loss =
      acvae_loss(state_.params, x_, split_.train_graph, state_.w, batch, opts_, noise, true);
  if (!finite(loss)) {
    throw TrainingError("non-finite objective at epoch " + std::to_string(state_.epoch) + ", step " +
                        std::to_string(state_.step) + ": " + describe(loss));
  }
  adam_step(state_.adam, state_.params);
  ++state_.step;
  return loss;
}

void Trainer::run_epoch() {
  const Graph& g = split_.train_graph;
  const std::size_t n = g.n_vertices();
  std::vector<Vertex> vertices(n);
  std::iota(vertices.begin(), vertices.end(), Vertex{0});

  if (!uses_graph(cfg_.mode) || g.n_edges() == 0) {
    std::shuffle(vertices.begin(), vertices.end(), rng_);
    for (std::size_t start = 0; start < n; start += cfg_.batch_vertices) {
      BatchSpec batch;
      const std::size_t stop = std::min(n, start + cfg_.batch_vertices);
      batch.vertices.assign(vertices.begin() + static_cast<std::ptrdiff_t>(start),
                            vertices.begin() + static_cast<std::ptrdiff_t>(stop));
      batch.vertex_scale = static_cast<double>(n) / static_cast<double>(batch.vertices.size());
      take_step(batch);
    }
  } else {
    std::vector<EdgeIndex> edges(g.n_edges());
    std::iota(edges.begin(), edges.end(), EdgeIndex{0});
    std::shuffle(edges.begin(), edges.end(), rng_);
    const std::size_t b1 = std::min(cfg_.batch_vertices, n);
    for (std::size_t start = 0; start < edges.size(); start += cfg_.batch_edges) {
      BatchSpec batch;
      const std::size_t stop = std::min(edges.size(), start + cfg_.batch_edges);
      batch.edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(start),
                         edges.begin() + static_cast<std::ptrdiff_t>(stop));
      // Partial Fisher-Yates: the first b1 entries become a uniform sample
      // without replacement.
      for (std::size_t k = 0; k < b1; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(vertices[k], vertices[pick(rng_)]);
      }
      batch.vertices.assign(vertices.begin(), vertices.begin() + static_cast<std::ptrdiff_t>(b1));
      if (opts_.gamma > 0.0) batch.negatives = sample_negatives(g, cfg_.batch_edges, rng_);
      batch.vertex_scale = static_cast<double>(n) / static_cast<double>(b1);
      batch.edge_scale = static_cast<double>(g.n_edges()) / static_cast<double>(batch.edges.size());
      batch.negative_scale = batch.negatives.empty() ? 0.0 : 1.0 / static_cast<double>(batch.negatives.size());
      take_step(batch);
    }
  }
  ++state_.epoch;
}

std::size_t Trainer::update_weights() {
  if (!adapts_weights(cfg_.mode)) return 0;
  PiUpdateResult r = pi_update(state_.params, x_, split_.train_graph, state_.w, opts_.prior,
                               cfg_.effective_sense(), cfg_.alpha);
  std::size_t changed = 0;
  if (state_.forest) {
    for (EdgeIndex e : r.forest.edge_indices()) changed += state_.forest->contains(e) ? 0 : 1;
  }
  state_.w = std::move(r.weights);
  state_.forest = std::move(r.forest);
  last_edit_distance_ = changed;
  return changed;
}

MasWeights Trainer::final_weights() const {
  if (adapts_weights(cfg_.mode) && state_.forest) return state_.forest->indicator();
  return state_.w;
}

DistanceTable Trainer::distances(bool refine) const {
  const SpanningForest* forest = state_.forest ? &*state_.forest : nullptr;
  return distances_for_mode(cfg_.mode, state_.params, x_, split_.train_graph, forest, refine);
}

MetricRecord Trainer::evaluate() {
  MetricRecord rec;
  rec.epoch = state_.epoch;
  rec.step = state_.step;
  rec.mode = cfg_.mode;
  ObjectiveOptions eval_opts = opts_;
  eval_opts.gamma = 0.0;
  rec.train_loss = full_objective(state_.params, x_, split_.train_graph, state_.w, eval_opts,
                                  cfg_.seed + kEvalNoise, false);
  if (!finite(rec.train_loss)) {
    throw TrainingError("non-finite train objective at epoch " + std::to_string(state_.epoch) + ": " +
                        describe(rec.train_loss));
  }
  last_good_ = state_.params;

  const DistanceTable dist = distances(true);
  rec.train_ncrr = train_ncrr(dist, split_.train_graph).mean_ncrr;
  rec.test_ncrr = ncrr(dist, split_).mean_ncrr;
  rec.test_ncrr_unrefined = adapts_weights(cfg_.mode) ? ncrr(distances(false), split_).mean_ncrr : rec.test_ncrr;
  rec.w_sum = state_.w.sum();
  rec.forest_edit_distance = last_edit_distance_;
  rec.accepted = checkpoint_rule(state_.best, rec.train_loss.elbo(), rec.train_ncrr, rec.test_ncrr,
                                 rec.test_ncrr_unrefined, state_.epoch);
  return rec;
}

std::vector<MetricRecord> Trainer::run(const std::function<void(const MetricRecord&)>& on_record) {
  std::vector<MetricRecord> log;
  while (state_.epoch < cfg_.epochs) {
    run_epoch();
    update_weights();
    if (state_.epoch % cfg_.eval_every == 0 || state_.epoch == cfg_.epochs) {
      log.push_back(evaluate());
      if (on_record) on_record(log.back());
    }
  }
  return log;
}

TrainResult train(const TrainConfig& cfg, const FeatureMatrix& x, const SplitDataset& split,
                  const std::function<void(const MetricRecord&)>& on_record) {
  Trainer trainer(cfg, x, split);
  auto log = trainer.run(on_record);
  return {std::move(trainer.state()), std::move(log)};
}

}  // namespace acvae
