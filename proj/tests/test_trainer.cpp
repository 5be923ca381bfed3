#include <cmath>

#include "doctest.h"

#include "acvae/error.hpp"
#include "acvae/oracles.hpp"
#include "acvae/trainer.hpp"
#include "fixtures.hpp"

using namespace acvae;

namespace {

TrainConfig quick(Mode mode, std::size_t epochs = 6) {
  TrainConfig c;
  c.mode = mode;
  c.latent_dim = 3;
  c.hidden_encoder = 6;
  c.hidden_corr = 6;
  c.epochs = epochs;
  c.eval_every = 2;
  c.batch_vertices = 8;
  c.batch_edges = 16;
  c.gamma = 5.0;
  c.seed = 4;
  return c;
}

}  // namespace

TEST_CASE("checkpoint rule") {
  BestRecord best;
  CHECK(checkpoint_rule(best, -100.0, 0.2, 0.05));
  CHECK(best.valid);
  CHECK_FALSE(checkpoint_rule(best, -90.0, 0.1, 0.9));
  CHECK(best.test_ncrr == 0.05);
  CHECK_FALSE(checkpoint_rule(best, -110.0, 0.3, 0.9));
  CHECK_FALSE(checkpoint_rule(best, -100.0, 0.3, 0.9));
  CHECK(checkpoint_rule(best, -80.0, 0.4, 0.07, 0.06, 12));
  CHECK(best.train_objective == -80.0);
  CHECK(best.train_ncrr == 0.4);
  CHECK(best.epoch == 12);
}

TEST_CASE("config validation and sense") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.alpha = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c.alpha = 1.0;
  c.latent_dim = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  CHECK(default_sense(Mode::acvae_saddle) == Sense::min);
  CHECK(default_sense(Mode::acvae_eb) == Sense::max);
  TrainConfig o;
  o.mode = Mode::acvae_saddle;
  o.mst_sense = Sense::max;
  CHECK(o.effective_sense() == Sense::max);
}

TEST_CASE("pi_update with alpha 1 lands on the enumerated optimum") {
  const Graph g = fixture::six();
  const FeatureMatrix x = fixture::counts(6, 9, 2);
  const ModelParams p = ModelParams::create(9, 3, 5, 4, 6);
  const PriorSpec prior{0.99};
  const MasWeights w0 = uniform_mas_weights(g);
  for (Sense sense : {Sense::min, Sense::max}) {
    const PiUpdateResult r = pi_update(p, x, g, w0, prior, sense, 1.0);
    const auto opt = oracle::optimal_forests(g, r.masses, sense);
    bool found = false;
    for (const auto& f : opt.forests) {
      found = found || SpanningForest(g, f).indicator().values == r.weights.values;
    }
    CHECK(found);
    CHECK(r.weights.values == r.forest.indicator().values);
  }
}

TEST_CASE("repeated pi_update with fixed masses converges geometrically") {
  const Graph g = fixture::six();
  const FeatureMatrix x = fixture::counts(6, 9, 2);
  const ModelParams p = ModelParams::create(9, 3, 5, 4, 6);
  const double alpha = 0.3;
  MasWeights w = uniform_mas_weights(g);
  const PiUpdateResult first = pi_update(p, x, g, w, PriorSpec{}, Sense::min, alpha);
  const auto target = first.forest.indicator().values;
  auto dist = [&](const MasWeights& v) {
    double m = 0.0;
    for (std::size_t e = 0; e < v.values.size(); ++e) m = std::max(m, std::abs(v.values[e] - target[e]));
    return m;
  };
  const double d0 = dist(w);
  for (int t = 1; t <= 10; ++t) {
    w = pi_update(p, x, g, w, PriorSpec{}, Sense::min, alpha).weights;
    CHECK(dist(w) == doctest::Approx(std::pow(1 - alpha, t) * d0).epsilon(1e-9));
    CHECK_NOTHROW(check_mas_invariants(g, w, 1e-12));
  }
}

TEST_CASE("equal masses select the index-order forest") {
  const Graph g = fixture::six();
  const std::vector<double> flat(g.n_edges(), 0.0);
  const auto f = min_spanning_forest(g, flat);
  CHECK(std::vector<EdgeIndex>(f.edge_indices().begin(), f.edge_indices().end()) ==
        std::vector<EdgeIndex>{0, 1, 2, 4, 5});
}

TEST_CASE("training is deterministic") {
  const Dataset ds = fixture::small_dataset();
  const FeatureMatrix x = ds.dense_features();
  const SplitDataset split = split_edges(ds.graph, 2);
  for (Mode m : {Mode::cvae_corr, Mode::acvae_saddle}) {
    const TrainResult a = train(quick(m), x, split);
    const TrainResult b = train(quick(m), x, split);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      CHECK(a.log[i].train_loss.total == b.log[i].train_loss.total);
      CHECK(a.log[i].test_ncrr == b.log[i].test_ncrr);
      CHECK(a.log[i].w_sum == b.log[i].w_sum);
    }
    CHECK(a.state.w.values == b.state.w.values);
  }
}

TEST_CASE("vae ignores the graph") {
  const Dataset ds = fixture::small_dataset();
  const FeatureMatrix x = ds.dense_features();
  const SplitDataset with_graph = split_edges(ds.graph, 2);
  const SplitDataset no_graph = make_split(ds.n_vertices(), {}, with_graph.test_edges);
  const TrainResult a = train(quick(Mode::vae), x, with_graph);
  const TrainResult b = train(quick(Mode::vae), x, no_graph);
  bool same = true;
  for (std::size_t i = 0; i < a.state.params.n_params(); ++i) {
    same = same && a.state.params.param(i) == b.state.params.param(i);
  }
  CHECK(same);
}

TEST_CASE("saddle mode on a tree keeps all-ones weights") {
  const Dataset ds = fixture::small_dataset();
  const FeatureMatrix x = ds.dense_features();
  std::vector<Edge> tree_edges;
  for (Vertex v = 1; v < ds.n_vertices(); ++v) tree_edges.push_back({v / 2, v});
  const Graph tree = build_graph(ds.n_vertices(), tree_edges);
  const std::vector<Edge> heldout = {{0, 5}, {3, 20}};
  const SplitDataset split = make_split(ds.n_vertices(), tree.edges(), heldout);
  Trainer t(quick(Mode::acvae_saddle), x, split);
  for (int e = 0; e < 4; ++e) {
    t.run_epoch();
    t.update_weights();
    for (double w : t.state().w.values) CHECK(w == 1.0);
  }
}

TEST_CASE("weights keep their invariants across training and metrics are finite") {
  const Dataset ds = fixture::small_dataset();
  const FeatureMatrix x = ds.dense_features();
  const SplitDataset split = split_edges(ds.graph, 5);
  for (Mode m : {Mode::acvae_saddle, Mode::acvae_eb}) {
    Trainer t(quick(m, 10), x, split);
    const double target = static_cast<double>(split.train_graph.n_vertices() - split.train_graph.n_components());
    t.run([&](const MetricRecord& rec) {
      CHECK(std::abs(rec.w_sum - target) < 1e-12);
      CHECK(std::isfinite(rec.train_loss.total));
      CHECK(rec.test_ncrr >= 0.0);
      CHECK(rec.test_ncrr <= 1.0);
      CHECK_NOTHROW(check_mas_invariants(split.train_graph, t.state().w, 1e-12));
    });
    CHECK(t.state().best.valid);
    CHECK(t.final_weights().is_integral());
  }
}
