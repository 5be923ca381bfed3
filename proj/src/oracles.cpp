#include "acvae/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "acvae/bp_refine.hpp"
#include "acvae/error.hpp"
#include "acvae/trainer.hpp"

namespace acvae::oracle {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2 pi)

// Trapezoid nodes on [lo, hi]; for Gaussian integrands on a wide enough
// window the rule converges exponentially in the node spacing.
struct Grid {
  std::vector<double> x;
  std::vector<double> w;
};

Grid trapezoid(double lo, double hi, std::size_t n) {
  Grid g;
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    g.x.push_back(lo + h * static_cast<double>(k));
    g.w.push_back(k == 0 || k + 1 == n ? 0.5 * h : h);
  }
  return g;
}

double log_normal1(double z, double mean, double std) {
  const double u = (z - mean) / std;
  return -0.5 * kLog2Pi - std::log(std) - 0.5 * u * u;
}

double log_normal2(double z1, double z2, double m1, double m2, double s1, double s2, double r) {
  const double u1 = (z1 - m1) / s1;
  const double u2 = (z2 - m2) / s2;
  const double om = 1.0 - r * r;
  return -kLog2Pi - std::log(s1) - std::log(s2) - 0.5 * std::log(om) - (u1 * u1 - 2.0 * r * u1 * u2 + u2 * u2) / (2.0 * om);
}

double forest_cost(std::span<const EdgeIndex> forest, std::span<const double> costs) {
  double c = 0.0;
  for (EdgeIndex e : forest) c += costs[e];
  return c;
}

Eigen::VectorXd mlp(const DenseNet& net, const Eigen::VectorXd& x) {
  const Eigen::VectorXd hidden = (net.w1() * x + net.b1()).array().tanh().matrix();
  return net.w2() * hidden + net.b2();
}

double transcribed_softplus(double v) { return v > 30.0 ? v : std::log(1.0 + std::exp(v)); }

// KL(N(m1, S1) || N(m0, S0)) for dense covariances.
double dense_kl(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& m0,
                const Eigen::MatrixXd& s0) {
  const Eigen::LLT<Eigen::MatrixXd> l0(s0);
  const Eigen::LLT<Eigen::MatrixXd> l1(s1);
  const Eigen::VectorXd diff = m0 - m1;
  const double trace = l0.solve(s1).trace();
  const double quad = diff.dot(l0.solve(diff));
  double logdet0 = 0.0, logdet1 = 0.0;
  for (Eigen::Index k = 0; k < s0.rows(); ++k) {
    logdet0 += 2.0 * std::log(l0.matrixL()(k, k));
    logdet1 += 2.0 * std::log(l1.matrixL()(k, k));
  }
  return 0.5 * (trace + quad - static_cast<double>(s0.rows()) + logdet0 - logdet1);
}

struct Encoded {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

Encoded transcribed_encode(const ModelParams& p, const Eigen::VectorXd& x) {
  const auto d = static_cast<Eigen::Index>(p.latent_dim);
  const Eigen::VectorXd out = mlp(p.encoder, x);
  Encoded e{out.head(d), Eigen::VectorXd(d)};
  for (Eigen::Index k = 0; k < d; ++k) e.std(k) = std::max(transcribed_softplus(out(d + k)), kNumericFloor);
  return e;
}

double transcribed_mass(const ModelParams& p, const Eigen::VectorXd& xi, const Eigen::VectorXd& xj, const Encoded& qi,
                        const Encoded& qj, double tau, bool correlated) {
  const auto d = static_cast<Eigen::Index>(p.latent_dim);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(d);
  if (correlated) {
    Eigen::VectorXd ij(2 * xi.size()), ji(2 * xi.size());
    ij << xi, xj;
    ji << xj, xi;
    const Eigen::VectorXd u = 0.5 * (mlp(p.corr, ij) + mlp(p.corr, ji));
    rho = (u.array().tanh() * kRhoScale).matrix();
  }
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  Eigen::MatrixXd sp = Eigen::MatrixXd::Identity(2 * d, 2 * d);
  for (Eigen::Index k = 0; k < d; ++k) {
    sq(k, k) = qi.std(k) * qi.std(k);
    sq(d + k, d + k) = qj.std(k) * qj.std(k);
    sq(k, d + k) = sq(d + k, k) = rho(k) * qi.std(k) * qj.std(k);
    sp(k, d + k) = sp(d + k, k) = tau;
  }
  Eigen::VectorXd mq(2 * d);
  mq << qi.mean, qj.mean;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  const double kl_i = dense_kl(qi.mean, qi.std.array().square().matrix().asDiagonal(), zero, id);
  const double kl_j = dense_kl(qj.mean, qj.std.array().square().matrix().asDiagonal(), zero, id);
  return dense_kl(mq, sq, Eigen::VectorXd::Zero(2 * d), sp) - kl_i - kl_j;
}

template <typename F>
Check worst_case(std::string name, double tolerance, std::size_t n, F&& error_of_case) {
  Check c{std::move(name), true, 0.0, tolerance, {}};
  for (std::size_t k = 0; k < n; ++k) {
    const double err = error_of_case(k);
    if (!(err <= c.error)) c.error = std::isnan(err) ? err : std::max(c.error, err);
  }
  c.passed = c.error <= tolerance;
  c.detail = std::to_string(n) + " cases";
  return c;
}

double rel_gap(double value, double reference) { return std::abs(value - reference) / std::max(1.0, std::abs(reference)); }

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

}  // namespace

std::vector<double> enumerated_mas_weights(const Graph& g) {
  const auto forests = enumerate_spanning_forests(g);
  std::vector<double> w(g.n_edges(), 0.0);
  for (const auto& f : forests) {
    for (EdgeIndex e : f.edge_indices()) w[e] += 1.0;
  }
  for (double& v : w) v /= static_cast<double>(forests.size());
  return w;
}

ForestOptimum optimal_forests(const Graph& g, std::span<const double> costs, Sense sense) {
  ForestOptimum best;
  bool first = true;
  for (const auto& f : enumerate_spanning_forests(g)) {
    const double c = forest_cost(f.edge_indices(), costs);
    const bool better = sense == Sense::min ? c < best.cost : c > best.cost;
    if (first || better) {
      best.cost = c;
      best.forests.clear();
      first = false;
    }
    if (c == best.cost) best.forests.emplace_back(f.edge_indices().begin(), f.edge_indices().end());
  }
  return best;
}

Graph random_graph(std::mt19937_64& rng, std::size_t min_vertices, std::size_t max_vertices, std::size_t max_edges) {
  const auto n = std::uniform_int_distribution<std::size_t>(min_vertices, max_vertices)(rng);
  std::vector<Edge> pairs;
  for (Vertex i = 0; i < n; ++i) {
    for (Vertex j = i + 1; j < n; ++j) pairs.push_back({i, j});
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const double p = uniform(rng, 0.2, 0.7);
  std::vector<Edge> kept;
  for (const Edge& e : pairs) {
    if (kept.size() < max_edges && uniform(rng, 0.0, 1.0) < p) kept.push_back(e);
  }
  return build_graph(n, kept);
}

Graph random_tree(std::mt19937_64& rng, std::size_t n) {
  std::vector<Vertex> label(n);
  std::iota(label.begin(), label.end(), Vertex{0});
  std::shuffle(label.begin(), label.end(), rng);
  std::vector<Edge> edges;
  for (Vertex v = 1; v < n; ++v) {
    const auto parent = std::uniform_int_distribution<Vertex>(0, v - 1)(rng);
    edges.push_back({label[parent], label[v]});
  }
  return build_graph(n, edges);
}

double quad_kl_singleton(double mean, double std) {
  const Grid grid = trapezoid(mean - 10.0 * std, mean + 10.0 * std, 801);
  double kl = 0.0;
  for (std::size_t k = 0; k < grid.x.size(); ++k) {
    const double lq = log_normal1(grid.x[k], mean, std);
    kl += grid.w[k] * std::exp(lq) * (lq - log_normal1(grid.x[k], 0.0, 1.0));
  }
  return kl;
}

double quad_kl_pair(const gauss1d::PairStats& q, double tau) {
  // Whitened coordinates u ~ N(0, I) map onto z through the Cholesky factor.
  const Grid grid = trapezoid(-10.0, 10.0, 321);
  const double c = std::sqrt(1.0 - q.rho * q.rho);
  double kl = 0.0;
  for (std::size_t a = 0; a < grid.x.size(); ++a) {
    const double u1 = grid.x[a];
    for (std::size_t b = 0; b < grid.x.size(); ++b) {
      const double u2 = grid.x[b];
      const double z1 = q.mean_i + q.std_i * u1;
      const double z2 = q.mean_j + q.std_j * (q.rho * u1 + c * u2);
      const double weight = grid.w[a] * grid.w[b] * std::exp(-0.5 * (u1 * u1 + u2 * u2) - kLog2Pi);
      const double lq = log_normal2(z1, z2, q.mean_i, q.mean_j, q.std_i, q.std_j, q.rho);
      const double lp = log_normal2(z1, z2, 0.0, 0.0, 1.0, 1.0, tau);
      kl += weight * (lq - lp);
    }
  }
  return kl;
}

McEstimate mc_kl_pair(const gauss1d::PairStats& q, double tau, std::size_t n_samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double c = std::sqrt(1.0 - q.rho * q.rho);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double u1 = normal(rng);
    const double u2 = normal(rng);
    const double z1 = q.mean_i + q.std_i * u1;
    const double z2 = q.mean_j + q.std_j * (q.rho * u1 + c * u2);
    const double v = log_normal2(z1, z2, q.mean_i, q.mean_j, q.std_i, q.std_j, q.rho) -
                     log_normal2(z1, z2, 0.0, 0.0, 1.0, 1.0, tau);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(n_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean) * n / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

ChainMoments quad_chain(std::span<const double> means, std::span<const double> stds, std::span<const double> rhos) {
  if (rhos.empty() || means.size() != rhos.size() + 1 || stds.size() != means.size()) {
    throw InputError("quad_chain needs k + 1 marginals for k links");
  }
  constexpr std::size_t kNodes = 161;
  std::vector<Grid> grids;
  for (std::size_t l = 0; l < means.size(); ++l) {
    grids.push_back(trapezoid(means[l] - 10.0 * stds[l], means[l] + 10.0 * stds[l], kNodes));
  }
  const auto link = [&](std::size_t l) {
    Eigen::MatrixXd m(kNodes, kNodes);
    for (std::size_t a = 0; a < kNodes; ++a) {
      for (std::size_t b = 0; b < kNodes; ++b) {
        m(a, b) = std::exp(log_normal2(grids[l].x[a], grids[l + 1].x[b], means[l], means[l + 1], stds[l], stds[l + 1], rhos[l]));
      }
    }
    return m;
  };
  // density[a, b]: joint density of (first, current) on the grid.
  Eigen::MatrixXd density = link(0);
  for (std::size_t l = 1; l < rhos.size(); ++l) {
    Eigen::MatrixXd kernel = link(l);
    for (std::size_t b = 0; b < kNodes; ++b) {
      kernel.row(b) *= grids[l].w[b] / std::exp(log_normal1(grids[l].x[b], means[l], stds[l]));
    }
    density = density * kernel;
  }
  const Grid& first = grids.front();
  const Grid& last = grids.back();
  double mass = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t a = 0; a < kNodes; ++a) {
    for (std::size_t b = 0; b < kNodes; ++b) {
      const double p = first.w[a] * last.w[b] * density(a, b);
      mass += p;
      m1 += p * first.x[a];
      m2 += p * last.x[b];
    }
  }
  m1 /= mass;
  m2 /= mass;
  double v1 = 0.0, v2 = 0.0, cov = 0.0;
  for (std::size_t a = 0; a < kNodes; ++a) {
    for (std::size_t b = 0; b < kNodes; ++b) {
      const double p = first.w[a] * last.w[b] * density(a, b) / mass;
      const double d1 = first.x[a] - m1;
      const double d2 = last.x[b] - m2;
      v1 += p * d1 * d1;
      v2 += p * d2 * d2;
      cov += p * d1 * d2;
    }
  }
  return {m1, m2, std::sqrt(v1), std::sqrt(v2), cov / std::sqrt(v1 * v2)};
}

double transcribed_objective(const ModelParams& params, const FeatureMatrix& x, const Graph& g,
                             std::span<const double> w, double tau, double gamma, bool correlated,
                             std::uint64_t noise_seed) {
  const std::size_t n = g.n_vertices();
  const auto d = static_cast<Eigen::Index>(params.latent_dim);
  const NoiseStream noise(noise_seed, 0);
  std::vector<Eigen::VectorXd> xs;
  std::vector<Encoded> q;
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(x.row(static_cast<Eigen::Index>(i)).transpose());
    q.push_back(transcribed_encode(params, xs.back()));
  }

  double total = 0.0;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd z(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      z(k) = q[i].mean(k) + q[i].std(k) * noise.normal(static_cast<Vertex>(i), static_cast<std::size_t>(k), 0);
    }
    const Eigen::VectorXd logits = mlp(params.decoder, z);
    const double top = logits.maxCoeff();
    const double lse = top + std::log((logits.array() - top).exp().sum());
    total += xs[i].dot((logits.array() - lse).matrix());
    total -= dense_kl(q[i].mean, q[i].std.array().square().matrix().asDiagonal(), zero, id);
  }
  for (EdgeIndex e = 0; e < g.n_edges(); ++e) {
    const auto [a, b] = g.edge(e);
    if (w[e] != 0.0) total -= w[e] * transcribed_mass(params, xs[a], xs[b], q[a], q[b], tau, correlated);
  }
  if (gamma > 0.0) {
    double hinge = 0.0;
    std::size_t count = 0;
    for (Vertex i = 0; i < n; ++i) {
      for (Vertex j = i + 1; j < n; ++j) {
        if (g.adjacent(i, j)) continue;
        hinge += std::max(0.0, -transcribed_mass(params, xs[i], xs[j], q[i], q[j], tau, correlated));
        ++count;
      }
    }
    if (count > 0) total -= gamma * hinge / static_cast<double>(count);
  }
  return total;
}

BruteRanking brute_force_ncrr(const DistanceTable& dist, const Graph& train_graph, std::span<const Edge> test_edges) {
  const std::size_t n = train_graph.n_vertices();
  BruteRanking out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0};
  std::vector<std::size_t> held(n, 0);
  for (const Edge& e : test_edges) {
    for (const auto& [i, j] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
      std::size_t count = 0;
      for (Vertex k = 0; k < n; ++k) {
        if (k == i || train_graph.adjacent(i, k)) continue;
        if (dist(i, k) <= dist(i, j)) ++count;
      }
      out.crr[i] += 1.0 / static_cast<double>(count);
      ++held[i];
    }
  }
  double sum = 0.0;
  std::size_t ranked = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (held[i] == 0) continue;
    double ideal = 0.0;
    for (std::size_t r = 1; r <= held[i]; ++r) ideal += 1.0 / static_cast<double>(r);
    out.ncrr[i] = out.crr[i] / ideal;
    sum += out.ncrr[i];
    ++ranked;
  }
  out.mean_ncrr = ranked == 0 ? 0.0 : sum / static_cast<double>(ranked);
  return out;
}

namespace {

std::vector<Check> forest_suite(const SuiteOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::vector<Graph> graphs;
  for (std::size_t k = 0; k < opts.n_cases; ++k) graphs.push_back(random_graph(rng, 1, 10, 16));

  std::vector<Check> out;
  out.push_back(worst_case("uniform MAS weights vs enumeration", 1e-9, graphs.size(), [&](std::size_t k) {
    const auto lib = uniform_mas_weights(graphs[k]).values;
    const auto ref = enumerated_mas_weights(graphs[k]);
    double err = 0.0;
    for (std::size_t e = 0; e < ref.size(); ++e) err = std::max(err, std::abs(lib[e] - ref[e]));
    return err;
  }));
  for (Sense sense : {Sense::min, Sense::max}) {
    for (bool ties : {false, true}) {
      std::string name = std::string(sense == Sense::min ? "min" : "max") + " spanning forest vs enumeration" +
                         (ties ? " (integer costs with ties)" : " (continuous costs)");
      out.push_back(worst_case(std::move(name), 0.0, graphs.size(), [&](std::size_t k) {
        const Graph& g = graphs[k];
        std::vector<double> costs(g.n_edges());
        for (double& c : costs) c = ties ? std::floor(uniform(rng, 0.0, 4.0)) : uniform(rng, -1.0, 1.0);
        const SpanningForest f = min_spanning_forest(g, costs, sense);
        const ForestOptimum best = optimal_forests(g, costs, sense);
        const std::vector<EdgeIndex> mine(f.edge_indices().begin(), f.edge_indices().end());
        const bool found = std::find(best.forests.begin(), best.forests.end(), mine) != best.forests.end();
        return found ? 0.0 : 1.0 + std::abs(forest_cost(mine, costs) - best.cost);
      }));
    }
  }
  return out;
}

gauss1d::PairStats random_pair(std::mt19937_64& rng) {
  return {uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0), uniform(rng, 0.3, 2.0), uniform(rng, 0.3, 2.0),
          uniform(rng, -0.95, 0.95)};
}

std::vector<Check> gaussian_suite(const SuiteOptions& opts) {
  std::mt19937_64 rng(opts.seed + 1);
  const std::size_t n = opts.n_cases;
  std::vector<gauss1d::PairStats> pairs;
  std::vector<double> taus;
  for (std::size_t k = 0; k < n; ++k) {
    pairs.push_back(random_pair(rng));
    taus.push_back(k % 2 == 0 ? 0.99 : uniform(rng, -0.9, 0.95));
  }
  const auto as_pair = [](const gauss1d::PairStats& s) {
    return PairGaussian{{s.mean_i}, {s.mean_j}, {s.std_i}, {s.std_j}, {s.rho}};
  };

  std::vector<Check> out;
  out.push_back(worst_case("kl_singleton vs quadrature", 1e-4, n, [&](std::size_t k) {
    const auto& s = pairs[k];
    return rel_gap(kl_singleton(DiagGaussian{{s.mean_i}, {s.std_i}}), quad_kl_singleton(s.mean_i, s.std_i));
  }));
  out.push_back(worst_case("kl_pair vs quadrature", 1e-4, n, [&](std::size_t k) {
    return rel_gap(kl_pair(as_pair(pairs[k]), PriorSpec{taus[k]}), quad_kl_pair(pairs[k], taus[k]));
  }));
  out.push_back(worst_case("edge_mass vs quadrature", 1e-4, n, [&](std::size_t k) {
    const auto& s = pairs[k];
    const double ref = quad_kl_pair(s, taus[k]) - quad_kl_singleton(s.mean_i, s.std_i) - quad_kl_singleton(s.mean_j, s.std_j);
    return rel_gap(edge_mass(as_pair(s), PriorSpec{taus[k]}), ref);
  }));
  out.push_back(worst_case("3-dimensional kl_pair vs summed quadrature", 1e-4, n / 3, [&](std::size_t k) {
    PairGaussian q;
    double ref = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
      const auto& s = pairs[3 * k + r];
      q.mean_i.push_back(s.mean_i);
      q.mean_j.push_back(s.mean_j);
      q.std_i.push_back(s.std_i);
      q.std_j.push_back(s.std_j);
      q.rho.push_back(s.rho);
      ref += quad_kl_pair(s, 0.99);
    }
    return rel_gap(kl_pair(q, PriorSpec{0.99}), ref);
  }));
  out.push_back(worst_case("compose_path vs quadrature over interior vertices", 1e-4, n, [&](std::size_t k) {
    const std::size_t links = 2 + k % 4;
    std::vector<double> means, stds, rhos;
    std::vector<DiagGaussian> marginals;
    for (std::size_t l = 0; l <= links; ++l) {
      means.push_back(uniform(rng, -2.0, 2.0));
      stds.push_back(uniform(rng, 0.3, 2.0));
      marginals.push_back({{means.back()}, {stds.back()}});
    }
    std::vector<PairGaussian> edges;
    for (std::size_t l = 0; l < links; ++l) {
      rhos.push_back(uniform(rng, -0.95, 0.95));
      edges.push_back({{means[l]}, {means[l + 1]}, {stds[l]}, {stds[l + 1]}, {rhos.back()}});
    }
    const PairGaussian lib = compose_path(marginals, edges);
    const ChainMoments ref = quad_chain(means, stds, rhos);
    return std::max({std::abs(lib.rho[0] - ref.rho), std::abs(lib.mean_i[0] - ref.mean_first),
                     std::abs(lib.mean_j[0] - ref.mean_last), std::abs(lib.std_i[0] - ref.std_first),
                     std::abs(lib.std_j[0] - ref.std_last)});
  }));
  Check mc = worst_case("kl_pair vs Monte Carlo (|z| <= 3)", 3.0, n, [&](std::size_t k) {
    const McEstimate est = mc_kl_pair(pairs[k], taus[k], 20000, opts.seed + 100 + k);
    return std::abs(kl_pair(as_pair(pairs[k]), PriorSpec{taus[k]}) - est.mean) / est.stderr_;
  });
  out.push_back(std::move(mc));
  return out;
}

FeatureMatrix random_counts(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  FeatureMatrix x = FeatureMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::uniform_int_distribution<int> count(0, 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = count(rng);
    x(i, i % x.cols()) += 1.0;
  }
  return x;
}

std::vector<Check> gradient_suite(const SuiteOptions& opts) {
  std::mt19937_64 rng(opts.seed + 2);
  const Graph g = build_graph(8, std::vector<Edge>{{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 4}, {4, 5}, {5, 3}, {5, 6}, {6, 7}, {1, 7}});
  const FeatureMatrix x = random_counts(rng, 8, 12);
  std::vector<Check> out;
  for (Mode mode : {Mode::acvae_saddle, Mode::cvae_ind}) {
    ModelParams params = ModelParams::create(12, 3, 6, 5, opts.seed + 3);
    const MasWeights w = uniform_mas_weights(g);
    BatchSpec batch;
    batch.vertices = {0, 2, 3, 5, 6};
    batch.edges = {0, 3, 4, 7, 9};
    batch.negatives = {{0, 4}, {1, 5}, {2, 7}, {3, 6}};
    batch.vertex_scale = 8.0 / 5.0;
    batch.edge_scale = 10.0 / 5.0;
    batch.negative_scale = 1.0 / 4.0;
    const ObjectiveOptions o = objective_options_for(mode, PriorSpec{0.99}, 5.0);
    const NoiseStream noise(opts.seed, 7);
    const LossClosure loss = [&](ModelParams& p) { return -acvae_loss(p, x, g, w, batch, o, noise, true).total; };
    const GradCheckResult r = grad_check(params, loss, std::max<std::size_t>(250, opts.n_cases), opts.seed + 4);
    Check c{std::string(to_string(mode)) + " minibatch gradient vs central differences", r.max_rel_error <= 1e-4,
            r.max_rel_error, 1e-4, std::to_string(r.n_checked) + " parameters"};
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Check> pi_update_suite(const SuiteOptions& opts) {
  std::mt19937_64 rng(opts.seed + 5);
  std::vector<Check> out;
  for (Sense sense : {Sense::max, Sense::min}) {
    out.push_back(worst_case(std::string("alpha=1 update lands on the enumerated ") +
                                 (sense == Sense::min ? "min" : "max") + "-mass forest",
                             0.0, opts.n_cases, [&](std::size_t k) {
      const Graph g = random_graph(rng, 6, 10, 14);
      const FeatureMatrix x = random_counts(rng, g.n_vertices(), 6);
      const ModelParams params = ModelParams::create(6, 2, 5, 4, opts.seed + 10 + k);
      const MasWeights w = uniform_mas_weights(g);
      const PiUpdateResult r = pi_update(params, x, g, w, PriorSpec{0.99}, sense, 1.0);
      const ForestOptimum best = optimal_forests(g, r.masses, sense);
      const std::vector<EdgeIndex> mine(r.forest.edge_indices().begin(), r.forest.edge_indices().end());
      const bool found = std::find(best.forests.begin(), best.forests.end(), mine) != best.forests.end();
      const bool indicator = r.weights.values == r.forest.indicator().values;
      return found && indicator ? 0.0 : 1.0;
    }));
  }
  double worst = 0.0;
  bool in_range = true;
  std::size_t updates = 0;
  for (std::size_t trial = 0; trial < 4; ++trial) {
    const Graph g = random_graph(rng, 6, 10, 20);
    const double target = static_cast<double>(g.n_vertices() - g.n_components());
    MasWeights w = trial % 2 == 0 ? uniform_mas_weights(g) : random_mas_init(g, opts.seed + trial);
    for (std::size_t step = 0; step < 200; ++step, ++updates) {
      std::vector<double> costs(g.n_edges());
      for (double& c : costs) c = uniform(rng, -1.0, 1.0);
      const double alpha = step % 10 == 0 ? 1.0 : uniform(rng, 1e-3, 1.0);
      w = soft_update(w, min_spanning_forest(g, costs, step % 2 == 0 ? Sense::min : Sense::max), alpha);
      worst = std::max(worst, std::abs(w.sum() - target));
      for (double v : w.values) in_range = in_range && v >= 0.0 && v <= 1.0;
    }
  }
  out.push_back({"sum of weights = |V| - components over soft-update fuzz", worst <= 1e-12 && in_range, worst, 1e-12,
                 std::to_string(updates) + " updates, weights " + (in_range ? "stay" : "leave") + " [0, 1]"});
  return out;
}

std::vector<Check> objective_suite(const SuiteOptions& opts) {
  std::mt19937_64 rng(opts.seed + 6);
  const Graph g = build_graph(6, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}, {4, 5}});
  const FeatureMatrix x = random_counts(rng, 6, 8);
  ModelParams params = ModelParams::create(8, 3, 5, 4, opts.seed + 7);
  const std::uint64_t noise_seed = opts.seed + 8;
  std::vector<Check> out;
  // tau = 0.5 leaves some non-edges with negative mass, so the hinge is live.
  for (const auto& [correlated, tau] : {std::pair{true, 0.99}, std::pair{false, 0.99}, std::pair{true, 0.5}}) {
    MasWeights w = uniform_mas_weights(g);
    const ObjectiveOptions o{PriorSpec{tau}, 2.5, correlated, 1};
    const LossBreakdown lib = full_objective(params, x, g, w, o, noise_seed);
    const double ref = transcribed_objective(params, x, g, w.values, tau, 2.5, correlated, noise_seed);
    const double err = std::abs(lib.total - ref);
    out.push_back({"full objective vs dense transcription (" + std::string(correlated ? "learned rho" : "rho = 0") +
                       ", tau " + std::to_string(tau).substr(0, 4) + ")",
                   err <= 1e-10, err, 1e-10, "negative term " + std::to_string(lib.negative_sampling)});
  }
  const MasWeights zero{std::vector<double>(g.n_edges(), 0.0)};
  const ObjectiveOptions o{PriorSpec{0.99}, 0.0, true, 1};
  const double lib = full_objective(params, x, g, zero, o, noise_seed).total;
  std::vector<Vertex> all(g.n_vertices());
  std::iota(all.begin(), all.end(), Vertex{0});
  const double vae = vae_elbo(params, x, all, 1.0, NoiseStream(noise_seed, 0)).total;
  out.push_back({"w = 0, gamma = 0 objective equals the VAE bound bitwise", lib == vae, std::abs(lib - vae), 0.0, ""});
  return out;
}

std::vector<Check> bp_suite(const SuiteOptions& opts) {
  std::mt19937_64 rng(opts.seed + 9);
  constexpr std::size_t d = 2;
  const auto random_marginal = [&] {
    DiagGaussian q;
    for (std::size_t k = 0; k < d; ++k) {
      q.mean.push_back(uniform(rng, -2.0, 2.0));
      q.std.push_back(uniform(rng, 0.3, 2.0));
    }
    return q;
  };
  const auto build = [&](const Graph& g, std::vector<DiagGaussian>& marginals) {
    marginals.clear();
    for (std::size_t v = 0; v < g.n_vertices(); ++v) marginals.push_back(random_marginal());
    std::vector<EdgeIndex> all(g.n_edges());
    std::iota(all.begin(), all.end(), EdgeIndex{0});
    std::vector<PairGaussian> pairs;
    for (EdgeIndex e = 0; e < g.n_edges(); ++e) {
      PairGaussian p = PairGaussian::independent(marginals[g.edge(e).u], marginals[g.edge(e).v]);
      for (double& r : p.rho) r = uniform(rng, -0.95, 0.95);
      pairs.push_back(std::move(p));
    }
    return RefinedMarginals(g, SpanningForest(g, all), marginals, pairs);
  };

  std::size_t pairs_checked = 0;
  bool bitwise = true;
  bool singletons = true;
  double worst = 0.0;
  for (std::size_t c = 0; c < opts.n_cases; ++c) {
    const std::size_t n = 1 + c % 12;
    Graph g = random_tree(rng, n);
    if (c % 3 == 2 && g.n_edges() > 1) {
      // Drop one edge so cross-tree pairs are covered too.
      std::vector<Edge> kept(g.edges().begin(), g.edges().end());
      kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(c % kept.size()));
      g = build_graph(n, kept);
    }
    std::vector<DiagGaussian> marginals;
    const RefinedMarginals rm = build(g, marginals);
    const Eigen::MatrixXd table = all_pairs_distances(rm);
    for (Vertex v = 0; v < n; ++v) {
      singletons = singletons && rm.vertex_marginal(v).mean == marginals[v].mean && rm.vertex_marginal(v).std == marginals[v].std;
    }
    for (Vertex i = 0; i < n; ++i) {
      for (Vertex j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto path = path_between(rm.forest(), i, j);
        double expected = 0.0;
        if (path) {
          std::vector<DiagGaussian> chain;
          std::vector<PairGaussian> links;
          for (std::size_t l = 0; l < path->size(); ++l) {
            chain.push_back(marginals[(*path)[l]]);
            if (l + 1 < path->size()) {
              const auto e = g.find_edge((*path)[l], (*path)[l + 1]);
              links.push_back(rm.oriented_edge_pair(*e, (*path)[l]));
            }
          }
          expected = expected_sq_distance(compose_path(chain, links));
        } else {
          expected = expected_sq_distance(PairGaussian::independent(marginals[i], marginals[j]));
        }
        bitwise = bitwise && table(i, j) == expected;
        worst = std::max(worst, std::abs(table(i, j) - expected));
        const PairGaussian r = refine_pair(rm, i, j);
        singletons = singletons && r.mean_i == marginals[i].mean && r.std_i == marginals[i].std &&
                     r.mean_j == marginals[j].mean && r.std_j == marginals[j].std;
        ++pairs_checked;
      }
    }
  }
  std::vector<Check> out;
  out.push_back({"incremental all-pairs distances equal per-pair path composition bitwise", bitwise, worst, 0.0,
                 std::to_string(pairs_checked) + " ordered pairs on forests up to 12 vertices"});
  out.push_back({"refined singleton marginals unchanged", singletons, singletons ? 0.0 : 1.0, 0.0, ""});

  out.push_back(worst_case("3-chain refined marginal vs quadrature", 1e-4, opts.n_cases, [&](std::size_t) {
    const Graph chain = build_graph(3, std::vector<Edge>{{0, 1}, {1, 2}});
    std::vector<DiagGaussian> marginals;
    const RefinedMarginals rm = build(chain, marginals);
    const PairGaussian r = refine_pair(rm, 0, 2);
    double err = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double means[] = {marginals[0].mean[k], marginals[1].mean[k], marginals[2].mean[k]};
      const double stds[] = {marginals[0].std[k], marginals[1].std[k], marginals[2].std[k]};
      const double rhos[] = {rm.oriented_edge_pair(0, 0).rho[k], rm.oriented_edge_pair(1, 1).rho[k]};
      const ChainMoments ref = quad_chain(means, stds, rhos);
      err = std::max({err, std::abs(r.rho[k] - ref.rho), std::abs(r.mean_i[k] - ref.mean_first),
                      std::abs(r.mean_j[k] - ref.mean_last), std::abs(r.std_i[k] - ref.std_first),
                      std::abs(r.std_j[k] - ref.std_last)});
    }
    return err;
  }));
  return out;
}

}  // namespace

// Seven vertices; train edges 0-1, 1-2, 3-4, 5-6, 0-3; test edges 0-2, 0-5,
// 2-4, 3-6, 1-6. The table includes ties between targets and other
// candidates.
SplitDataset ranking_fixture_split() {
  const std::vector<Edge> train{{0, 1}, {1, 2}, {3, 4}, {5, 6}, {0, 3}};
  const std::vector<Edge> test{{0, 2}, {0, 5}, {2, 4}, {3, 6}, {1, 6}};
  return make_split(7, train, test);
}

DistanceTable ranking_fixture_table() {
  DistanceTable t(7, 7);
  // clang-format off
  t << 0.0, 1.0, 2.0, 1.5, 4.0, 2.0, 3.0,
       1.0, 0.0, 0.5, 2.5, 1.0, 3.0, 1.0,
       2.0, 0.5, 0.0, 2.0, 3.0, 1.0, 2.0,
       1.5, 2.5, 2.0, 0.0, 0.5, 4.0, 2.0,
       4.0, 1.0, 3.0, 0.5, 0.0, 1.0, 5.0,
       2.0, 3.0, 1.0, 4.0, 1.0, 0.0, 0.2,
       3.0, 1.0, 2.0, 2.0, 5.0, 0.2, 0.0;
  // clang-format on
  return t;
}

namespace {

std::vector<Check> ncrr_suite(const SuiteOptions& opts) {
  std::vector<Check> out;
  const SplitDataset split = ranking_fixture_split();
  const DistanceTable table = ranking_fixture_table();
  const RankingReport lib = ncrr(table, split);
  const BruteRanking ref = brute_force_ncrr(table, split.train_graph, split.test_edges);
  bool equal = lib.mean_ncrr == ref.mean_ncrr;
  for (std::size_t i = 0; i < 7; ++i) equal = equal && lib.crr[i] == ref.crr[i] && lib.ncrr[i] == ref.ncrr[i];
  out.push_back({"7-vertex ranking fixture vs brute-force ranking", equal, std::abs(lib.mean_ncrr - ref.mean_ncrr),
                 0.0, "mean NCRR " + std::to_string(lib.mean_ncrr)});

  std::mt19937_64 rng(opts.seed + 11);
  double worst = 0.0;
  for (std::size_t c = 0; c < opts.n_cases; ++c) {
    const Graph g = random_graph(rng, 4, 10, 20);
    const SplitDataset s = split_edges(g, opts.seed + c);
    const auto n = static_cast<Eigen::Index>(g.n_vertices());
    // Each test edge gets its own small distance, everything else is far.
    DistanceTable t = DistanceTable::Constant(n, n, 10.0);
    t.diagonal().setZero();
    for (std::size_t k = 0; k < s.test_edges.size(); ++k) {
      const Edge e = s.test_edges[k];
      t(e.u, e.v) = t(e.v, e.u) = 0.01 * static_cast<double>(k + 1);
    }
    const RankingReport r = ncrr(t, s);
    for (std::size_t i = 0; i < g.n_vertices(); ++i) {
      if (r.heldout[i] > 0) worst = std::max(worst, std::abs(r.ncrr[i] - 1.0));
    }
  }
  out.push_back({"perfect rankings score NCRR = 1", worst == 0.0, worst, 0.0, std::to_string(opts.n_cases) + " graphs"});
  return out;
}

}  // namespace

std::vector<std::string_view> suite_names() { return {"forest", "gaussian", "gradient", "pi_update", "objective", "bp", "ncrr"}; }

std::vector<Check> run_suite(std::string_view name, const SuiteOptions& opts) {
  if (name == "forest") return forest_suite(opts);
  if (name == "gaussian") return gaussian_suite(opts);
  if (name == "gradient") return gradient_suite(opts);
  if (name == "pi_update") return pi_update_suite(opts);
  if (name == "objective") return objective_suite(opts);
  if (name == "bp") return bp_suite(opts);
  if (name == "ncrr") return ncrr_suite(opts);
  throw InputError("unknown oracle suite '" + std::string(name) + "'");
}

}  // namespace acvae::oracle
