#include <cmath>
#include <limits>

#include "doctest.h"

#include "acvae/error.hpp"
#include "acvae/neural.hpp"

using namespace acvae;

namespace {

void zero_all(ModelParams& p) {
  for (DenseNet* n : p.nets()) std::fill(n->params().begin(), n->params().end(), 0.0);
}

Vector counts(std::size_t D, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> c(0, 3);
  Vector x(D);
  for (auto& v : x) v = c(rng);
  x[0] += 1.0;
  return x;
}

// Quadratic toy loss over every parameter; writes its exact gradient.
double quadratic(ModelParams& p) {
  double loss = 0.0;
  std::size_t k = 0;
  for (DenseNet* n : p.nets()) {
    auto w = n->params();
    auto g = n->grads();
    for (std::size_t i = 0; i < w.size(); ++i, ++k) {
      const double c = 0.5 + 0.01 * static_cast<double>(k % 7);
      loss += 0.5 * c * w[i] * w[i] + 0.1 * w[i];
      g[i] = c * w[i] + 0.1;
    }
  }
  return loss;
}

}  // namespace

TEST_CASE("encode with zero parameters") {
  ModelParams p = ModelParams::create(6, 3, 5, 4, 1);
  zero_all(p);
  const DiagGaussian q = encode(p, counts(6, 2));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(q.mean[k] == 0.0);
    CHECK(q.std[k] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }
  const PairGaussian pair = encode_pair(p, counts(6, 2), counts(6, 3));
  for (double r : pair.rho) CHECK(r == 0.0);
  CHECK_THROWS_AS(encode(p, Vector::Zero(5)), InputError);
}

TEST_CASE("encode is deterministic and encode_pair symmetric bitwise") {
  const ModelParams p = ModelParams::create(8, 4, 6, 5, 9);
  const Vector a = counts(8, 4), b = counts(8, 5);
  const DiagGaussian qa = encode(p, a);
  CHECK(qa.mean == encode(p, a).mean);
  CHECK(qa.std == encode(p, a).std);
  const PairGaussian ab = encode_pair(p, a, b);
  const PairGaussian ba = encode_pair(p, b, a);
  CHECK(ab.rho == ba.rho);
  CHECK(ab.mean_i == ba.mean_j);
  CHECK(ab.std_j == ba.std_i);
  CHECK(ab.mean_i == qa.mean);
  CHECK(ab.std_i == qa.std);
  for (double r : ab.rho) CHECK(std::abs(r) < kRhoScale);
}

TEST_CASE("encoder Jacobian matches finite differences") {
  ModelParams p = ModelParams::create(5, 3, 4, 4, 12);
  const Vector x = counts(5, 6);
  const auto f = [&](ModelParams& m) { return encode(m, x).mean[1] + 2.0 * encode(m, x).std[2]; };
  // Backward through DenseNet directly: upstream gradient on the raw heads.
  DenseNet::Cache cache;
  const Vector out = p.encoder.forward(x, &cache);
  Vector up = Vector::Zero(out.size());
  up[1] = 1.0;
  up[3 + 2] = 2.0 * sigmoid(out[3 + 2]);
  p.zero_grad();
  p.encoder.backward(x, cache, up);
  for (std::size_t i = 0; i < p.encoder.size(); i += 3) {
    const double save = p.encoder.params()[i];
    for (double h : {1e-3, 1e-4}) {
      p.encoder.params()[i] = save + h;
      const double fp = f(p);
      p.encoder.params()[i] = save - h;
      const double fm = f(p);
      p.encoder.params()[i] = save;
      const double numeric = (fp - fm) / (2 * h);
      CHECK(std::abs(numeric - p.encoder.grads()[i]) < 50 * h * h);
    }
  }
}

TEST_CASE("decoder log likelihood") {
  ModelParams p = ModelParams::create(7, 3, 4, 4, 2);
  zero_all(p);
  Vector one_hot = Vector::Zero(7);
  one_hot[3] = 1.0;
  CHECK(decode_log_likelihood(p, Vector::Zero(3), one_hot).value == doctest::Approx(-std::log(7.0)));
  const LogLikelihood empty = decode_log_likelihood(p, Vector::Zero(3), Vector::Zero(7));
  CHECK(empty.empty_input);
  CHECK(empty.value == 0.0);

  p = ModelParams::create(7, 3, 4, 4, 2);
  const Vector x = counts(7, 1);
  Vector z(3);
  z << 0.3, -0.8, 1.1;
  CHECK(decode_log_likelihood(p, z, x).value <= 0.0);
  Vector gz;
  p.zero_grad();
  decode_log_likelihood_backward(p, z, x, 1.0, gz);
  for (int k = 0; k < 3; ++k) {
    const double h = 1e-5;
    Vector zp = z, zm = z;
    zp[k] += h;
    zm[k] -= h;
    const double numeric = (decode_log_likelihood(p, zp, x).value - decode_log_likelihood(p, zm, x).value) / (2 * h);
    CHECK(std::abs(numeric - gz[k]) <= 1e-5 * std::max(1.0, std::abs(numeric)));
  }
}

TEST_CASE("adam step") {
  ModelParams p = ModelParams::create(4, 2, 3, 3, 5);
  const ModelParams before = p;
  AdamState st;
  p.zero_grad();
  adam_step(st, p);
  for (std::size_t i = 0; i < p.n_params(); ++i) CHECK(p.param(i) == before.param(i));

  ModelParams q = before;
  AdamState s2;
  q.zero_grad();
  q.encoder.grads()[0] = 3.0;
  q.encoder.grads()[1] = -0.002;
  adam_step(s2, q);
  CHECK(q.encoder.params()[0] - before.encoder.params()[0] == doctest::Approx(-s2.lr).epsilon(1e-6));
  CHECK(q.encoder.params()[1] - before.encoder.params()[1] == doctest::Approx(s2.lr).epsilon(1e-4));

  for (int t = 0; t < 50; ++t) {
    q.zero_grad();
    q.encoder.grads()[0] = 3.0;
    adam_step(s2, q);
  }
  CHECK(q.encoder.params()[0] < before.encoder.params()[0] - 40 * s2.lr);

  q.zero_grad();
  q.decoder.grads()[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(s2, q), TrainingError);
}

TEST_CASE("grad_check on a quadratic and a corrupted gradient") {
  ModelParams p = ModelParams::create(6, 3, 5, 4, 3);
  const auto exact = grad_check(p, quadratic, 100, 1);
  CHECK(exact.max_rel_error < 1e-7);
  const auto corrupted = grad_check(
      p,
      [](ModelParams& m) {
        const double l = quadratic(m);
        for (DenseNet* n : m.nets()) {
          for (double& g : n->grads()) g *= 1.1;
        }
        return l;
      },
      100, 1);
  CHECK(corrupted.max_rel_error > 1e-2);
}

TEST_CASE("softplus and sigmoid are stable") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
  CHECK(sigmoid(0.0) == 0.5);
}
