#include <cmath>
#include <random>

#include "doctest.h"

#include "acvae/bp_refine.hpp"
#include "acvae/error.hpp"
#include "acvae/eval.hpp"
#include "acvae/oracles.hpp"
#include "fixtures.hpp"

using namespace acvae;

namespace {

DistanceTable random_table(std::size_t n, std::mt19937_64& rng, int levels) {
  std::uniform_int_distribution<int> u(1, levels);
  DistanceTable t = DistanceTable::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) t(i, j) = t(j, i) = u(rng);
  }
  return t;
}

}  // namespace

TEST_CASE("split examples") {
  std::vector<Edge> star;
  for (Vertex v = 1; v <= 40; ++v) star.push_back({0, v});
  const Graph g = build_graph(41, star);
  const SplitDataset s = split_edges(g, 3);
  CHECK(s.heldout_counts[0] == 2);

  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    const Graph r = oracle::random_graph(rng, 5, 10, 16);
    const SplitDataset sp = split_edges(r, rep);
    CHECK(sp.train_graph.n_edges() + sp.test_edges.size() == r.n_edges());
    for (const Edge& e : sp.test_edges) {
      CHECK(r.adjacent(e.u, e.v));
      CHECK_FALSE(sp.train_graph.adjacent(e.u, e.v));
    }
    for (Vertex v = 0; v < r.n_vertices(); ++v) {
      const std::size_t quota = std::max<std::size_t>(1, r.degree(v) / 20);
      CHECK(sp.heldout_counts[v] <= quota);
      if (sp.heldout_counts[v] == 0) {
        // Nothing left to take: every incident edge leads to a full neighbor.
        for (Vertex w : r.neighbors(v)) CHECK(sp.heldout_counts[w] >= std::max<std::size_t>(1, r.degree(w) / 20));
      }
    }
    const SplitDataset again = split_edges(r, rep);
    CHECK(again.test_edges == sp.test_edges);
  }
}

TEST_CASE("ncrr examples") {
  // Vertex 0 with heldout edge to 1 at distance 0.5, every other candidate farther.
  const std::vector<Edge> train = {{2, 3}};
  const std::vector<Edge> test1 = {{0, 1}};
  DistanceTable t = DistanceTable::Constant(4, 4, 5.0);
  t(0, 1) = t(1, 0) = 0.5;
  const RankingReport one = ncrr(t, make_split(4, train, test1));
  CHECK(one.crr[0] == 1.0);
  CHECK(one.ncrr[0] == 1.0);

  const std::vector<Edge> test2 = {{0, 1}, {0, 2}};
  t(0, 2) = t(2, 0) = 0.7;
  const RankingReport two = ncrr(t, make_split(4, train, test2));
  CHECK(two.crr[0] == doctest::Approx(1.5));
  CHECK(two.ncrr[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(ncrr(DistanceTable::Zero(3, 3), make_split(4, train, test2)), InputError);
  DistanceTable nan = t;
  nan(0, 3) = std::nan("");
  CHECK_THROWS_AS(ncrr(nan, make_split(4, train, test2)), InputError);
}

TEST_CASE("seven-vertex fixture matches brute force") {
  const SplitDataset split = oracle::ranking_fixture_split();
  const DistanceTable table = oracle::ranking_fixture_table();
  const RankingReport r = ncrr(table, split);
  const auto b = oracle::brute_force_ncrr(table, split.train_graph, split.test_edges);
  CHECK(r.mean_ncrr == b.mean_ncrr);
  CHECK(r.crr == b.crr);
  CHECK(r.mean_ncrr == doctest::Approx(0.503175).epsilon(1e-5));
}

TEST_CASE("ncrr properties on random tables") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 30; ++rep) {
    const Graph g = oracle::random_graph(rng, 6, 10, 16);
    const SplitDataset split = split_edges(g, rep);
    const DistanceTable t = random_table(g.n_vertices(), rng, 4);
    const RankingReport r = ncrr(t, split);
    const auto b = oracle::brute_force_ncrr(t, split.train_graph, split.test_edges);
    CHECK(r.mean_ncrr == doctest::Approx(b.mean_ncrr).epsilon(1e-14));
    for (double v : r.ncrr) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const DistanceTable warped = t.array().exp() * 3.0 + 1.0;
    CHECK(ncrr(warped, split).mean_ncrr == r.mean_ncrr);
    const RankingReport loose = ncrr(t, make_split(g.n_vertices(), {}, split.test_edges));
    for (std::size_t v = 0; v < r.crr.size(); ++v) CHECK(r.crr[v] >= loose.crr[v]);
  }
}

TEST_CASE("perfect ranking scores one") {
  const SplitDataset split = oracle::ranking_fixture_split();
  DistanceTable t = DistanceTable::Constant(7, 7, 10.0);
  double d = 1.0;
  for (const Edge& e : split.test_edges) t(e.u, e.v) = t(e.v, e.u) = (d += 0.1);
  CHECK(ncrr(t, split).mean_ncrr == 1.0);
  // Tied targets count against each other.
  for (const Edge& e : split.test_edges) t(e.u, e.v) = t(e.v, e.u) = 1.0;
  CHECK(ncrr(t, split).mean_ncrr < 1.0);
}

TEST_CASE("distances by mode") {
  const Graph g = fixture::six();
  const FeatureMatrix x = fixture::counts(6, 9, 3);
  ModelParams p = ModelParams::create(9, 3, 5, 4, 8);
  const auto q = encode_all(p, x);
  const DistanceTable vae = distances_for_mode(Mode::vae, p, x, g, nullptr);
  double manual = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    manual += std::pow(q[1].mean[k] - q[4].mean[k], 2) + q[1].std[k] * q[1].std[k] + q[4].std[k] * q[4].std[k];
  }
  CHECK(vae(1, 4) == doctest::Approx(manual).epsilon(1e-14));

  const SpanningForest f = min_spanning_forest(g, std::vector<double>(g.n_edges(), 0.0));
  std::fill(p.corr.params().begin(), p.corr.params().end(), 0.0);
  const DistanceTable acvae = distances_for_mode(Mode::acvae_saddle, p, x, g, &f);
  CHECK((acvae - vae).cwiseAbs().maxCoeff() < 1e-12);

  ModelParams pc = ModelParams::create(9, 3, 5, 4, 8);
  const DistanceTable corr = distances_for_mode(Mode::cvae_corr, pc, x, g, nullptr);
  CHECK(corr(2, 5) == doctest::Approx(expected_sq_distance(encode_pair(pc, x.row(2).transpose(), x.row(5).transpose())))
                          .epsilon(1e-13));
  const DistanceTable refined = distances_for_mode(Mode::acvae_saddle, pc, x, g, &f);
  const RefinedMarginals rm = RefinedMarginals::from_model(g, f, pc, x);
  CHECK(refined(0, 5) == expected_sq_distance(refine_pair(rm, 0, 5)));
  const DistanceTable unrefined = distances_for_mode(Mode::acvae_saddle, pc, x, g, &f, false);
  const DistanceTable ind = distances_for_mode(Mode::vae, pc, x, g, nullptr);
  CHECK(unrefined(0, 5) == ind(0, 5));
  CHECK(unrefined(0, 1) == doctest::Approx(corr(0, 1)).epsilon(1e-13));
}

TEST_CASE("train ranking") {
  const SplitDataset split = oracle::ranking_fixture_split();
  DistanceTable t = DistanceTable::Constant(7, 7, 10.0);
  double d = 1.0;
  for (const Edge& e : split.train_graph.edges()) t(e.u, e.v) = t(e.v, e.u) = (d += 0.1);
  CHECK(train_ncrr(t, split.train_graph).mean_ncrr == 1.0);
}
