#include "acvae/objective.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <string>
#include <unordered_map>

#include "acvae/error.hpp"

namespace acvae {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::vae: return "vae";
    case Mode::cvae_ind: return "cvae_ind";
    case Mode::cvae_corr: return "cvae_corr";
    case Mode::acvae_saddle: return "acvae_saddle";
    case Mode::acvae_eb: return "acvae_eb";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : {Mode::vae, Mode::cvae_ind, Mode::cvae_corr, Mode::acvae_saddle, Mode::acvae_eb}) {
    if (to_string(m) == name) return m;
  }
  throw InputError("unknown mode '" + std::string(name) + "'");
}

bool uses_graph(Mode mode) { return mode != Mode::vae; }
bool learns_correlation(Mode mode) { return mode != Mode::vae && mode != Mode::cvae_ind; }
bool adapts_weights(Mode mode) { return mode == Mode::acvae_saddle || mode == Mode::acvae_eb; }

void validate_batch(const Graph& g, const BatchSpec& batch) {
  if (batch.vertices.empty()) throw InputError("empty vertex batch");
  for (Vertex v : batch.vertices) {
    if (v >= g.n_vertices()) throw InputError("batch vertex out of range");
  }
  for (EdgeIndex e : batch.edges) {
    if (e >= g.n_edges()) throw InputError("batch edge out of range");
  }
  for (const Edge& p : batch.negatives) {
    if (p.u >= g.n_vertices() || p.v >= g.n_vertices()) throw InputError("negative pair out of range");
    if (p.u == p.v) throw InputError("negative pair repeats a vertex");
    if (g.adjacent(p.u, p.v)) throw InputError("negative pair is an edge of the graph");
  }
}

std::size_t count_non_edges(const Graph& g) {
  const std::size_t n = g.n_vertices();
  return n * (n - (n > 0 ? 1 : 0)) / 2 - g.n_edges();
}

BatchSpec full_batch(const Graph& g) {
  BatchSpec b;
  b.vertices.resize(g.n_vertices());
  for (Vertex v = 0; v < g.n_vertices(); ++v) b.vertices[v] = v;
  b.edges.resize(g.n_edges());
  for (EdgeIndex e = 0; e < g.n_edges(); ++e) b.edges[e] = e;
  for (Vertex i = 0; i < g.n_vertices(); ++i) {
    for (Vertex j = i + 1; j < g.n_vertices(); ++j) {
      if (!g.adjacent(i, j)) b.negatives.push_back({i, j});
    }
  }
  b.negative_scale = b.negatives.empty() ? 0.0 : 1.0 / static_cast<double>(b.negatives.size());
  return b;
}

std::vector<Edge> sample_negatives(const Graph& g, std::size_t n_negatives, std::mt19937_64& rng) {
  std::vector<Edge> out;
  const std::size_t available = count_non_edges(g);
  if (available == 0 || n_negatives == 0) return out;
  const std::size_t n = g.n_vertices();
  std::uniform_int_distribution<Vertex> pick(0, static_cast<Vertex>(n - 1));
  out.reserve(n_negatives);
  // Rejection sampling; dense graphs fall back to enumerating non-edges.
  std::size_t attempts = 0;
  const std::size_t max_attempts = 50 * n_negatives + 1000;
  while (out.size() < n_negatives && attempts < max_attempts) {
    ++attempts;
    const Vertex a = pick(rng);
    const Vertex b = pick(rng);
    if (a == b || g.adjacent(a, b)) continue;
    out.push_back(a < b ? Edge{a, b} : Edge{b, a});
  }
  if (out.size() < n_negatives) {
    std::vector<Edge> all;
    for (Vertex i = 0; i < n; ++i) {
      for (Vertex j = i + 1; j < n; ++j) {
        if (!g.adjacent(i, j)) all.push_back({i, j});
      }
    }
    std::uniform_int_distribution<std::size_t> pick_pair(0, all.size() - 1);
    while (out.size() < n_negatives) out.push_back(all[pick_pair(rng)]);
  }
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double to_unit_open(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

double NoiseStream::normal(Vertex v, std::size_t dim, std::size_t sample) const {
  std::uint64_t h = splitmix64(seed_);
  h = splitmix64(h ^ step_);
  h = splitmix64(h ^ static_cast<std::uint64_t>(v));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(dim) << 20) ^ static_cast<std::uint64_t>(sample));
  const double u1 = to_unit_open(h);
  const double u2 = to_unit_open(splitmix64(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ObjectiveOptions objective_options_for(Mode mode, const PriorSpec& prior, double gamma, std::size_t mc_samples) {
  ObjectiveOptions o;
  o.prior = prior;
  o.gamma = uses_graph(mode) ? gamma : 0.0;
  o.correlated = learns_correlation(mode);
  o.mc_samples = mc_samples;
  return o;
}

namespace {

struct VertexState {
  Vertex id = 0;
  DenseNet::Cache cache;
  Vector raw_std;
  std::vector<double> mean;
  std::vector<double> std;
  Vector d_mean;  // gradient of -total
  Vector d_std;
};

class VertexCache {
 public:
  VertexCache(const ModelParams& params, const FeatureMatrix& x) : params_(params), x_(x) {}

  VertexState& get(Vertex v) {
    if (const auto it = slot_.find(v); it != slot_.end()) return states_[it->second];
    VertexState s;
    s.id = v;
    const Vector out = params_.encoder.forward(x_.row(v).transpose(), &s.cache);
    const auto d = static_cast<Eigen::Index>(params_.latent_dim);
    s.raw_std = out.tail(d);
    s.mean.resize(d);
    s.std.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      s.mean[k] = out(k);
      s.std[k] = std::max(softplus(out(d + k)), kNumericFloor);
    }
    s.d_mean = Vector::Zero(d);
    s.d_std = Vector::Zero(d);
    slot_.emplace(v, states_.size());
    states_.push_back(std::move(s));
    return states_.back();
  }

  std::deque<VertexState>& states() { return states_; }

 private:
  const ModelParams& params_;
  const FeatureMatrix& x_;
  std::unordered_map<Vertex, std::size_t> slot_;
  std::deque<VertexState> states_;  // stable references across get()
};

// Reconstruction and singleton KL over the vertex batch.
void accumulate_vertex_terms(ModelParams& params, const FeatureMatrix& x, std::span<const Vertex> vertices,
                             double vertex_scale, const NoiseStream& noise, std::size_t mc_samples,
                             bool with_gradients, VertexCache& cache, LossBreakdown& out) {
  if (mc_samples == 0) throw InputError("mc_samples must be positive");
  const std::size_t d = params.latent_dim;
  const double inv_samples = 1.0 / static_cast<double>(mc_samples);
  Vector z(static_cast<Eigen::Index>(d));
  Vector eps(static_cast<Eigen::Index>(d));
  Vector grad_z;
  for (Vertex v : vertices) {
    VertexState& s = cache.get(v);
    const auto xv = x.row(v).transpose();
    double ll = 0.0;
    for (std::size_t r = 0; r < mc_samples; ++r) {
      for (std::size_t k = 0; k < d; ++k) {
        eps(k) = noise.normal(v, k, r);
        z(k) = s.mean[k] + s.std[k] * eps(k);
      }
      LogLikelihood term;
      if (with_gradients) {
        term = decode_log_likelihood_backward(params, z, xv, -vertex_scale * inv_samples, grad_z);
        s.d_mean += grad_z;
        s.d_std += grad_z.cwiseProduct(eps);
      } else {
        term = decode_log_likelihood(params, z, xv);
      }
      out.empty_input = out.empty_input || term.empty_input;
      ll += term.value;
    }
    out.reconstruction += vertex_scale * (ll * inv_samples);

    double kl = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      kl += gauss1d::kl_singleton(s.mean[k], s.std[k]);
      if (with_gradients) {
        double dm = 0.0, ds = 0.0;
        gauss1d::kl_singleton_grad(s.mean[k], s.std[k], dm, ds);
        s.d_mean(k) += vertex_scale * dm;
        s.d_std(k) += vertex_scale * ds;
      }
    }
    out.singleton_kl += vertex_scale * kl;
  }
}

// Edge mass of the pair (i, j); when coeff != 0 and gradients are on, adds
// coeff * d(mass) to both vertices and to the correlation network.
double pair_mass(ModelParams& params, const FeatureMatrix& x, VertexState& si, VertexState& sj,
                 const ObjectiveOptions& opts, bool with_gradients, double coeff) {
  const std::size_t d = params.latent_dim;
  const auto xi = x.row(si.id).transpose();
  const auto xj = x.row(sj.id).transpose();
  Vector ij, ji, u_ij, u_ji;
  DenseNet::Cache c_ij, c_ji;
  Vector u = Vector::Zero(static_cast<Eigen::Index>(d));
  if (opts.correlated) {
    ij.resize(2 * xi.size());
    ij << xi, xj;
    ji.resize(2 * xi.size());
    ji << xj, xi;
    u_ij = params.corr.forward(ij, &c_ij);
    u_ji = params.corr.forward(ji, &c_ji);
    u = 0.5 * (u_ij + u_ji);
  }
  double mass = 0.0;
  Vector d_u(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) {
    const double t = std::tanh(u(k));
    const gauss1d::PairStats q{si.mean[k], sj.mean[k], si.std[k], sj.std[k], opts.correlated ? kRhoScale * t : 0.0};
    mass += gauss1d::edge_mass(q, opts.prior.tau);
    if (with_gradients && coeff != 0.0) {
      const gauss1d::PairPartials g = gauss1d::edge_mass_grad(q, opts.prior.tau);
      si.d_mean(k) += coeff * g.mean_i;
      sj.d_mean(k) += coeff * g.mean_j;
      si.d_std(k) += coeff * g.std_i;
      sj.d_std(k) += coeff * g.std_j;
      d_u(k) = coeff * g.rho * kRhoScale * (1.0 - t * t);
    }
  }
  if (opts.correlated && with_gradients && coeff != 0.0) {
    const Vector half = 0.5 * d_u;
    params.corr.backward(ij, c_ij, half);
    params.corr.backward(ji, c_ji, half);
  }
  return mass;
}

void backprop_encoder(ModelParams& params, const FeatureMatrix& x, VertexCache& cache) {
  const auto d = static_cast<Eigen::Index>(params.latent_dim);
  Vector grad_out(2 * d);
  for (VertexState& s : cache.states()) {
    grad_out.head(d) = s.d_mean;
    for (Eigen::Index k = 0; k < d; ++k) grad_out(d + k) = s.d_std(k) * sigmoid(s.raw_std(k));
    params.encoder.backward(x.row(s.id).transpose(), s.cache, grad_out);
  }
}

void check_inputs(const ModelParams& params, const FeatureMatrix& x, const Graph& g) {
  if (static_cast<std::size_t>(x.rows()) != g.n_vertices()) throw InputError("feature rows do not match vertices");
  if (static_cast<std::size_t>(x.cols()) != params.feature_dim) throw InputError("feature width does not match model");
}

}  // namespace

LossBreakdown acvae_loss(ModelParams& params, const FeatureMatrix& x, const Graph& g, const MasWeights& w,
                         const BatchSpec& batch, const ObjectiveOptions& opts, const NoiseStream& noise,
                         bool with_gradients) {
  check_inputs(params, x, g);
  validate_batch(g, batch);
  opts.prior.validate();
  if (w.values.size() != g.n_edges()) throw InputError("MAS weights not aligned with graph edges");
  if (opts.gamma < 0.0) throw InputError("gamma must be nonnegative");

  if (with_gradients) params.zero_grad();
  LossBreakdown out;
  VertexCache cache(params, x);
  accumulate_vertex_terms(params, x, batch.vertices, batch.vertex_scale, noise, opts.mc_samples, with_gradients,
                          cache, out);

  for (EdgeIndex e : batch.edges) {
    const double weight = w.values[e];
    if (weight == 0.0) continue;
    const auto [a, b] = g.edge(e);
    VertexState& si = cache.get(a);
    VertexState& sj = cache.get(b);
    const double coeff = batch.edge_scale * weight;
    out.pairwise_penalty += coeff * pair_mass(params, x, si, sj, opts, with_gradients, coeff);
  }

  if (opts.gamma > 0.0) {
    const double coeff = opts.gamma * batch.negative_scale;
    for (const Edge& p : batch.negatives) {
      VertexState& si = cache.get(p.u);
      VertexState& sj = cache.get(p.v);
      // d(-total)/d(mass) = -coeff while the hinge is active. The mass is
      // evaluated first without gradients to find out whether it is.
      const double mass = pair_mass(params, x, si, sj, opts, false, 0.0);
      if (mass < 0.0) {
        if (with_gradients) pair_mass(params, x, si, sj, opts, true, -coeff);
        out.negative_sampling += coeff * (-mass);
      }
    }
  }

  out.total = out.reconstruction - out.singleton_kl - out.pairwise_penalty - out.negative_sampling;
  if (with_gradients) backprop_encoder(params, x, cache);
  return out;
}

LossBreakdown full_objective(ModelParams& params, const FeatureMatrix& x, const Graph& g, const MasWeights& w,
                             const ObjectiveOptions& opts, std::uint64_t noise_seed, bool with_gradients) {
  const BatchSpec batch = full_batch(g);
  return acvae_loss(params, x, g, w, batch, opts, NoiseStream(noise_seed, 0), with_gradients);
}

LossBreakdown vae_elbo(ModelParams& params, const FeatureMatrix& x, std::span<const Vertex> vertices,
                       double vertex_scale, const NoiseStream& noise, std::size_t mc_samples, bool with_gradients) {
  if (vertices.empty()) throw InputError("empty vertex batch");
  if (with_gradients) params.zero_grad();
  LossBreakdown out;
  VertexCache cache(params, x);
  accumulate_vertex_terms(params, x, vertices, vertex_scale, noise, mc_samples, with_gradients, cache, out);
  out.total = out.reconstruction - out.singleton_kl - out.pairwise_penalty - out.negative_sampling;
  if (with_gradients) backprop_encoder(params, x, cache);
  return out;
}

LossBreakdown cvae_loss(ModelParams& params, const FeatureMatrix& x, const Graph& g, CvaeVariant variant,
                        const PriorSpec& prior, double gamma, std::uint64_t noise_seed) {
  ObjectiveOptions opts;
  opts.prior = prior;
  opts.gamma = gamma;
  opts.correlated = variant == CvaeVariant::correlated;
  return full_objective(params, x, g, uniform_mas_weights(g), opts, noise_seed, false);
}

std::vector<DiagGaussian> encode_all(const ModelParams& params, const FeatureMatrix& x) {
  std::vector<DiagGaussian> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index v = 0; v < x.rows(); ++v) out.push_back(encode(params, x.row(v).transpose()));
  return out;
}

std::vector<double> edge_masses(const ModelParams& params, const FeatureMatrix& x, const Graph& g,
                                const PriorSpec& prior, bool correlated) {
  prior.validate();
  const auto q = encode_all(params, x);
  std::vector<double> masses(g.n_edges());
  const std::size_t d = params.latent_dim;
  for (EdgeIndex e = 0; e < g.n_edges(); ++e) {
    const auto [a, b] = g.edge(e);
    Vector u = Vector::Zero(static_cast<Eigen::Index>(d));
    if (correlated) u = correlation_logits(params, x.row(a).transpose(), x.row(b).transpose());
    double m = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double rho = correlated ? kRhoScale * std::tanh(u(k)) : 0.0;
      m += gauss1d::edge_mass({q[a].mean[k], q[b].mean[k], q[a].std[k], q[b].std[k], rho}, prior.tau);
    }
    masses[e] = m;
  }
  return masses;
}

}  // namespace acvae
