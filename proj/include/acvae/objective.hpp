#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "acvae/gaussian.hpp"
#include "acvae/graph.hpp"
#include "acvae/neural.hpp"

namespace acvae {

// One row per vertex.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Mode { vae, cvae_ind, cvae_corr, acvae_saddle, acvae_eb };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);
bool uses_graph(Mode mode);
bool learns_correlation(Mode mode);
bool adapts_weights(Mode mode);

// All terms are estimates of full-data sums; `total` is the maximized
// objective.
struct LossBreakdown {
  double reconstruction = 0.0;
  double singleton_kl = 0.0;
  double pairwise_penalty = 0.0;  // sum_e w_e m_e
  double negative_sampling = 0.0;
  double total = 0.0;
  bool empty_input = false;  // some batch vertex had an all-zero count vector

  // Objective without the negative-sampling regularizer.
  double elbo() const { return reconstruction - singleton_kl - pairwise_penalty; }
};

struct BatchSpec {
  std::vector<Vertex> vertices;
  std::vector<EdgeIndex> edges;
  std::vector<Edge> negatives;
  double vertex_scale = 1.0;    // population / batch size
  double edge_scale = 1.0;      // population / batch size
  double negative_scale = 1.0;  // 1 / batch size: the term is a mean
};

// Throws InputError for empty vertex batches, out-of-range indices, and
// negative pairs that are adjacent or degenerate.
void validate_batch(const Graph& g, const BatchSpec& batch);

// Every vertex, every edge and every non-adjacent pair, with unit scales.
BatchSpec full_batch(const Graph& g);

std::size_t count_non_edges(const Graph& g);

// Draws `n_negatives` uniformly random non-adjacent distinct pairs.
std::vector<Edge> sample_negatives(const Graph& g, std::size_t n_negatives, std::mt19937_64& rng);

// Reparameterization noise keyed by (seed, step, vertex, dimension, sample),
// so any evaluation can be replayed exactly.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t step) : seed_(seed), step_(step) {}
  double normal(Vertex v, std::size_t dim, std::size_t sample = 0) const;
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t seed_;
  std::uint64_t step_;
};

struct ObjectiveOptions {
  PriorSpec prior;
  double gamma = 0.0;
  bool correlated = true;  // false forces rho = 0 in every pairwise posterior
  std::size_t mc_samples = 1;
};

ObjectiveOptions objective_options_for(Mode mode, const PriorSpec& prior, double gamma, std::size_t mc_samples = 1);

// Minibatch estimate of the ACVAE objective. When with_gradients is set the
// params' grad buffers are overwritten with the gradient of -total.
LossBreakdown acvae_loss(ModelParams& params, const FeatureMatrix& x, const Graph& g, const MasWeights& w,
                         const BatchSpec& batch, const ObjectiveOptions& opts, const NoiseStream& noise,
                         bool with_gradients);

// Exact objective over the whole graph: all vertices, edges and non-edges.
LossBreakdown full_objective(ModelParams& params, const FeatureMatrix& x, const Graph& g, const MasWeights& w,
                             const ObjectiveOptions& opts, std::uint64_t noise_seed, bool with_gradients = false);

// Standard VAE bound over the given vertices.
LossBreakdown vae_elbo(ModelParams& params, const FeatureMatrix& x, std::span<const Vertex> vertices,
                       double vertex_scale, const NoiseStream& noise, std::size_t mc_samples = 1,
                       bool with_gradients = false);

enum class CvaeVariant { independent, correlated };

// Full-data CVAE bound: weights fixed to uniform_mas_weights(g); the
// independent variant forces rho = 0.
LossBreakdown cvae_loss(ModelParams& params, const FeatureMatrix& x, const Graph& g, CvaeVariant variant,
                        const PriorSpec& prior, double gamma, std::uint64_t noise_seed);

// Closed-form edge masses for every edge of g under the current encoders.
std::vector<double> edge_masses(const ModelParams& params, const FeatureMatrix& x, const Graph& g,
                                const PriorSpec& prior, bool correlated);

// Singleton posteriors for every vertex.
std::vector<DiagGaussian> encode_all(const ModelParams& params, const FeatureMatrix& x);

}  // namespace acvae
