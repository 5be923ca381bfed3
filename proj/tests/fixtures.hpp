#pragma once

#include <cmath>
#include <random>

#include "acvae/dataset.hpp"
#include "acvae/neural.hpp"
#include "acvae/objective.hpp"

namespace fixture {

// 6 vertices: a 4-cycle 0-1-2-3 with a pendant path 3-4-5.
inline acvae::Graph six() {
  const std::vector<acvae::Edge> e = {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {3, 4}, {4, 5}};
  return acvae::build_graph(6, e);
}

inline acvae::FeatureMatrix counts(std::size_t n, std::size_t D, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> c(0, 3);
  acvae::FeatureMatrix x(n, D);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = c(rng);
    x(i, 0) += 1.0;
  }
  return x;
}

// Nets whose every posterior is N(mean, 1) with pairwise correlation rho.
inline acvae::ModelParams prior_matching(std::size_t D, std::size_t d, double rho, double mean = 0.0) {
  acvae::ModelParams p = acvae::ModelParams::create(D, d, 4, 4, 1);
  for (acvae::DenseNet* n : p.nets()) std::fill(n->params().begin(), n->params().end(), 0.0);
  auto enc = p.encoder.params();
  const std::size_t b2 = enc.size() - 2 * d;
  for (std::size_t k = 0; k < d; ++k) {
    enc[b2 + k] = mean;
    enc[b2 + d + k] = std::log(std::exp(1.0) - 1.0);
  }
  auto corr = p.corr.params();
  for (std::size_t k = 0; k < d; ++k) corr[corr.size() - d + k] = std::atanh(rho / acvae::kRhoScale);
  return p;
}

inline acvae::Dataset small_dataset(std::uint64_t seed = 3) {
  acvae::SyntheticSpec s;
  s.n_vertices = 36;
  s.n_clusters = 3;
  s.p_intra = 0.3;
  s.p_inter = 0.02;
  s.vocab_size = 30;
  s.words_per_vertex = 15;
  s.topic_strength = 0.5;
  s.topic_words = 8;
  s.seed = seed;
  acvae::Dataset ds = acvae::generate_synthetic(s);
  ds.features = acvae::tfidf(ds.features);
  return ds;
}

}  // namespace fixture
