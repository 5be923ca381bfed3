#include <cmath>
#include <random>

#include "doctest.h"

#include "acvae/error.hpp"
#include "acvae/gaussian.hpp"
#include "acvae/oracles.hpp"

using namespace acvae;

TEST_CASE("kl_singleton") {
  CHECK(kl_singleton(DiagGaussian::standard(4)) == 0.0);
  CHECK(kl_singleton(DiagGaussian{{1.0}, {1.0}}) == doctest::Approx(0.5));
  const DiagGaussian q{{0.3, -0.7}, {0.5, 2.0}};
  double quad = 0.0;
  for (std::size_t k = 0; k < 2; ++k) quad += oracle::quad_kl_singleton(q.mean[k], q.std[k]);
  CHECK(std::abs(kl_singleton(q) - quad) < 1e-8);
  CHECK_THROWS_AS(kl_singleton(DiagGaussian{{0.0}, {0.0}}), InputError);
  CHECK_THROWS_AS(kl_singleton(DiagGaussian{{0.0, 1.0}, {1.0}}), InputError);
}

TEST_CASE("kl_pair examples") {
  CHECK(std::abs(kl_pair(PairGaussian::prior(3, 0.99), PriorSpec{0.99})) < 1e-12);

  const DiagGaussian a{{0.2, 1.0}, {0.8, 0.6}};
  const DiagGaussian b{{-0.1, 0.4}, {1.3, 1.1}};
  const PairGaussian ind = PairGaussian::independent(a, b);
  CHECK(kl_pair(ind, PriorSpec{0.0}) == doctest::Approx(kl_singleton(a) + kl_singleton(b)).epsilon(1e-12));
  CHECK(std::abs(edge_mass(ind, PriorSpec{0.0})) < 1e-12);

  const gauss1d::PairStats s{0.2, -0.1, 0.8, 1.3, 0.5};
  CHECK(std::abs(gauss1d::kl_pair(s, 0.99) - oracle::quad_kl_pair(s, 0.99)) < 1e-4);

  CHECK_THROWS_AS(kl_pair(PairGaussian{{0.0}, {0.0}, {1.0}, {1.0}, {1.0}}, PriorSpec{0.5}), InputError);
  CHECK_THROWS_AS(kl_pair(ind, PriorSpec{1.0}), InputError);
}

TEST_CASE("edge mass of a correlated standard pair") {
  const gauss1d::PairStats s{0.0, 0.0, 1.0, 1.0, 0.9};
  const double m = gauss1d::edge_mass(s, 0.99);
  // Standard marginals have no singleton cost, so the mass is the pair KL
  // itself; correlation brings it well below the independent pair's.
  CHECK(m == doctest::Approx(0.5 * (0.218 / 0.0199 - 2.0 + std::log(0.0199 / 0.19))).epsilon(1e-12));
  CHECK(m < gauss1d::edge_mass({0.0, 0.0, 1.0, 1.0, 0.0}, 0.99));
  CHECK(gauss1d::edge_mass({2.0, 2.0, 1.0, 1.0, 0.99}, 0.99) < 0.0);
  CHECK(std::abs(m - (oracle::quad_kl_pair(s, 0.99) - 2 * oracle::quad_kl_singleton(0.0, 1.0))) < 1e-4);
  CHECK(std::abs(edge_mass(PairGaussian::prior(2, 0.99), PriorSpec{0.99})) < 1e-12);
}

TEST_CASE("kl properties on random draws") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> mu(-2, 2), sd(0.2, 2.5), r(-0.95, 0.95);
  for (int rep = 0; rep < 200; ++rep) {
    const gauss1d::PairStats s{mu(rng), mu(rng), sd(rng), sd(rng), r(rng)};
    const double tau = r(rng);
    CHECK(gauss1d::kl_pair(s, tau) >= 0.0);
    CHECK(gauss1d::kl_singleton(s.mean_i, s.std_i) >= 0.0);
    const gauss1d::PairStats sw{s.mean_j, s.mean_i, s.std_j, s.std_i, s.rho};
    CHECK(gauss1d::kl_pair(sw, tau) == doctest::Approx(gauss1d::kl_pair(s, tau)).epsilon(1e-13));
  }
}

TEST_CASE("analytic partials match central differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> mu(-1.5, 1.5), sd(0.3, 2.0), r(-0.9, 0.9);
  const double h = 1e-6;
  for (int rep = 0; rep < 50; ++rep) {
    gauss1d::PairStats s{mu(rng), mu(rng), sd(rng), sd(rng), r(rng)};
    const double tau = 0.99;
    const auto g = gauss1d::edge_mass_grad(s, tau);
    auto fd = [&](double gauss1d::PairStats::*f) {
      gauss1d::PairStats p = s, m = s;
      p.*f += h;
      m.*f -= h;
      return (gauss1d::edge_mass(p, tau) - gauss1d::edge_mass(m, tau)) / (2 * h);
    };
    CHECK(g.mean_i == doctest::Approx(fd(&gauss1d::PairStats::mean_i)).epsilon(1e-6));
    CHECK(g.mean_j == doctest::Approx(fd(&gauss1d::PairStats::mean_j)).epsilon(1e-6));
    CHECK(g.std_i == doctest::Approx(fd(&gauss1d::PairStats::std_i)).epsilon(1e-6));
    CHECK(g.std_j == doctest::Approx(fd(&gauss1d::PairStats::std_j)).epsilon(1e-6));
    CHECK(g.rho == doctest::Approx(fd(&gauss1d::PairStats::rho)).epsilon(1e-6));
  }
}

TEST_CASE("expected squared distance") {
  const DiagGaussian s = DiagGaussian::standard(3);
  CHECK(expected_sq_distance(PairGaussian::independent(s, s)) == doctest::Approx(6.0));
  const PairGaussian near{{0.4}, {0.4}, {1.0}, {1.0}, {0.9999}};
  CHECK(expected_sq_distance(near) < 1e-3);
  const PairGaussian ex{{1.0}, {-1.0}, {0.5}, {0.5}, {0.5}};
  CHECK(expected_sq_distance(ex) == doctest::Approx(4.25));
}

TEST_CASE("compose_path") {
  const DiagGaussian a{{0.1}, {0.7}}, b{{-0.3}, {1.2}}, c{{0.5}, {0.9}};
  const PairGaussian ab{{0.1}, {-0.3}, {0.7}, {1.2}, {0.6}};
  const PairGaussian bc{{-0.3}, {0.5}, {1.2}, {0.9}, {-0.4}};
  {
    const std::vector<DiagGaussian> m{a, b};
    const std::vector<PairGaussian> p{ab};
    const PairGaussian out = compose_path(m, p);
    CHECK(out.rho == ab.rho);
    CHECK(out.mean_i == ab.mean_i);
    CHECK(out.std_j == ab.std_j);
  }
  {
    const DiagGaussian st = DiagGaussian::standard(1);
    const PairGaussian e{{0.0}, {0.0}, {1.0}, {1.0}, {0.9}};
    const std::vector<DiagGaussian> m{st, st, st};
    const std::vector<PairGaussian> p{e, e};
    CHECK(compose_path(m, p).rho[0] == doctest::Approx(0.81).epsilon(1e-14));
    const auto q = oracle::quad_chain(std::vector<double>{0, 0, 0}, std::vector<double>{1, 1, 1},
                                      std::vector<double>{0.9, 0.9});
    CHECK(std::abs(q.rho - 0.81) < 1e-4);
  }
  {
    const std::vector<DiagGaussian> m{a, b, c};
    const std::vector<PairGaussian> p{ab, bc};
    const PairGaussian out = compose_path(m, p);
    const auto q = oracle::quad_chain(std::vector<double>{0.1, -0.3, 0.5}, std::vector<double>{0.7, 1.2, 0.9},
                                      std::vector<double>{0.6, -0.4});
    CHECK(std::abs(out.rho[0] - q.rho) < 1e-4);
    CHECK(out.mean_i == a.mean);
    CHECK(out.std_j == c.std);
    PairGaussian cut = bc;
    cut.rho[0] = 0.0;
    CHECK(compose_path(m, std::vector<PairGaussian>{ab, cut}).rho[0] == 0.0);
  }
  {
    PairGaussian bad = bc;
    bad.std_i[0] = 1.3;
    CHECK_THROWS_AS(compose_path(std::vector<DiagGaussian>{a, b, c}, std::vector<PairGaussian>{ab, bad}),
                    ConsistencyError);
  }
}

TEST_CASE("composed distance is nonincreasing in link correlation") {
  const DiagGaussian st = DiagGaussian::standard(1);
  double prev = 1e300;
  for (int k = 0; k <= 20; ++k) {
    const double r = 0.045 * k;
    const PairGaussian e{{0.0}, {0.0}, {1.0}, {1.0}, {r}};
    const PairGaussian f{{0.0}, {0.0}, {1.0}, {1.0}, {0.7}};
    const double d = expected_sq_distance(compose_path(std::vector<DiagGaussian>{st, st, st},
                                                       std::vector<PairGaussian>{e, f}));
    CHECK(d <= prev);
    prev = d;
  }
}
