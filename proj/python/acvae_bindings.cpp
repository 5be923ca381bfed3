#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "acvae/config.hpp"
#include "acvae/dataset.hpp"
#include "acvae/error.hpp"
#include "acvae/eval.hpp"
#include "acvae/formats.hpp"
#include "acvae/oracles.hpp"
#include "acvae/trainer.hpp"

namespace py = pybind11;
using namespace acvae;

namespace {

using EdgeArray = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 2, Eigen::RowMajor>;

std::vector<Edge> to_edges(const EdgeArray& a) {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    if (a(r, 0) < 0 || a(r, 1) < 0) throw InputError("negative vertex index");
    out.push_back({static_cast<Vertex>(a(r, 0)), static_cast<Vertex>(a(r, 1))});
  }
  return out;
}

EdgeArray from_edges(std::span<const Edge> edges) {
  EdgeArray a(static_cast<Eigen::Index>(edges.size()), 2);
  for (std::size_t r = 0; r < edges.size(); ++r) {
    a(static_cast<Eigen::Index>(r), 0) = edges[r].u;
    a(static_cast<Eigen::Index>(r), 1) = edges[r].v;
  }
  return a;
}

py::dict dataset_dict(const Dataset& ds, const std::vector<std::size_t>& clusters) {
  py::dict d;
  d["edges"] = from_edges(ds.graph.edges());
  d["features"] = ds.dense_features();
  d["clusters"] = clusters;
  d["n_vertices"] = ds.n_vertices();
  return d;
}

KeyValues to_kv(const py::dict& config) {
  KeyValues kv;
  for (auto item : config) kv[py::str(item.first)] = py::str(item.second);
  return kv;
}

py::dict record_dict(const MetricRecord& r) {
  py::dict d;
  d["epoch"] = r.epoch;
  d["reconstruction"] = r.train_loss.reconstruction;
  d["singleton_kl"] = r.train_loss.singleton_kl;
  d["pairwise_penalty"] = r.train_loss.pairwise_penalty;
  d["train_objective"] = r.train_loss.elbo();
  d["train_ncrr"] = r.train_ncrr;
  d["test_ncrr"] = r.test_ncrr;
  d["test_ncrr_unrefined"] = r.test_ncrr_unrefined;
  d["w_sum"] = r.w_sum;
  d["accepted"] = r.accepted;
  return d;
}

// A trained model bound to its feature matrix and train graph.
struct Model {
  Checkpoint ckpt;
  FeatureMatrix x;
  Graph train_graph;
  std::vector<MetricRecord> log;

  std::optional<SpanningForest> forest() const {
    if (!adapts_weights(ckpt.config.mode)) return std::nullopt;
    return SpanningForest(train_graph, ckpt.forest_edges);
  }

  DistanceTable distances(bool refine) const {
    const auto f = forest();
    return distances_for_mode(ckpt.config.mode, ckpt.params, x, train_graph, f ? &*f : nullptr, refine);
  }

  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> embeddings() const {
    const auto q = encode_all(ckpt.params, x);
    const auto n = static_cast<Eigen::Index>(q.size());
    const auto d = static_cast<Eigen::Index>(ckpt.params.latent_dim);
    Eigen::MatrixXd mean(n, d), std(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        mean(i, k) = q[i].mean[k];
        std(i, k) = q[i].std[k];
      }
    }
    return {mean, std};
  }

  EdgeArray forest_edges() const {
    std::vector<Edge> out;
    for (EdgeIndex e : ckpt.forest_edges) out.push_back(train_graph.edge(e));
    return from_edges(out);
  }
};

Model train_model(const FeatureMatrix& x, const EdgeArray& train_edges, const EdgeArray& test_edges,
                  const py::dict& config, bool keep_best) {
  const TrainConfig cfg = resolve_config(nullptr, to_kv(config));
  const auto n = static_cast<std::size_t>(x.rows());
  const SplitDataset split = make_split(n, to_edges(train_edges), to_edges(test_edges));
  Model m{{}, x, split.train_graph, {}};
  {
    py::gil_scoped_release release;
    Trainer trainer(cfg, m.x, split);
    auto snap = [&] {
      const TrainState& s = trainer.state();
      std::vector<EdgeIndex> f;
      if (s.forest) f.assign(s.forest->edge_indices().begin(), s.forest->edge_indices().end());
      return Checkpoint{cfg, s.params.feature_dim, s.params, s.w, std::move(f), s.epoch};
    };
    m.log = trainer.run([&](const MetricRecord& rec) {
      if (keep_best && rec.accepted) m.ckpt = snap();
    });
    if (!keep_best) m.ckpt = snap();
  }
  return m;
}

py::dict ranking(const DistanceTable& dist, std::size_t n, const EdgeArray& train_edges, const EdgeArray& test_edges) {
  const SplitDataset split = make_split(n, to_edges(train_edges), to_edges(test_edges));
  const RankingReport r = ncrr(dist, split);
  py::dict d;
  d["mean_ncrr"] = r.mean_ncrr;
  d["ncrr"] = r.ncrr;
  d["crr"] = r.crr;
  d["heldout"] = r.heldout;
  d["n_ranked"] = r.n_ranked;
  return d;
}

}  // namespace

PYBIND11_MODULE(_acvae, m) {
  m.doc() = "Adaptive correlated variational auto-encoders";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_RuntimeError);

  m.def(
      "generate_synthetic",
      [](std::size_t n_vertices, std::size_t n_clusters, double p_intra, double p_inter, std::size_t vocab_size,
         std::size_t words_per_vertex, double topic_strength, std::size_t topic_words, std::uint64_t seed) {
        const SyntheticSpec s{n_vertices, n_clusters, p_intra,     p_inter, vocab_size,
                              words_per_vertex, topic_strength, topic_words, seed};
        return dataset_dict(generate_synthetic(s), synthetic_clusters(s));
      },
      py::arg("n_vertices") = 300, py::arg("n_clusters") = 6, py::arg("p_intra") = 0.15, py::arg("p_inter") = 0.002,
      py::arg("vocab_size") = 200, py::arg("words_per_vertex") = 30, py::arg("topic_strength") = 0.25,
      py::arg("topic_words") = 20, py::arg("seed") = 0,
      "Planted-partition graph with bag-of-words counts. Returns edges, features and clusters.");

  m.def(
      "benchmark",
      [] {
        Dataset ds = generate_synthetic(benchmark_spec());
        ds.features = tfidf(ds.features);
        return dataset_dict(ds, synthetic_clusters(benchmark_spec()));
      },
      "The fixed benchmark dataset with tf-idf features.");

  m.def(
      "tfidf", [](const FeatureMatrix& counts) { return FeatureMatrix(tfidf(counts.sparseView()).toDense()); },
      py::arg("counts"));

  m.def(
      "split_edges",
      [](std::size_t n, const EdgeArray& edges, std::uint64_t seed) {
        const SplitDataset s = split_edges(build_graph(n, to_edges(edges)), seed);
        return py::make_tuple(from_edges(s.train_graph.edges()), from_edges(s.test_edges));
      },
      py::arg("n_vertices"), py::arg("edges"), py::arg("seed") = 0, "Returns (train_edges, test_edges).");

  m.def("uniform_mas_weights",
        [](std::size_t n, const EdgeArray& edges) { return uniform_mas_weights(build_graph(n, to_edges(edges))).values; },
        py::arg("n_vertices"), py::arg("edges"));

  m.def("ncrr", &ranking, py::arg("distances"), py::arg("n_vertices"), py::arg("train_edges"), py::arg("test_edges"));

  py::class_<Model>(m, "Model")
      .def_property_readonly("mode", [](const Model& s) { return std::string(to_string(s.ckpt.config.mode)); })
      .def_property_readonly("epoch", [](const Model& s) { return s.ckpt.epoch; })
      .def_property_readonly("config", [](const Model& s) { return to_key_values(s.ckpt.config); })
      .def_property_readonly("weights", [](const Model& s) { return s.ckpt.weights.values; })
      .def_property_readonly("log", [](const Model& s) {
        py::list out;
        for (const auto& r : s.log) out.append(record_dict(r));
        return out;
      })
      .def("distances", &Model::distances, py::arg("refine") = true)
      .def("embeddings", &Model::embeddings, "Returns (means, stds), one row per vertex.")
      .def("forest_edges", &Model::forest_edges)
      .def("save", [](const Model& s, const std::string& path) { save_checkpoint(path, s.ckpt); }, py::arg("path"));

  m.def("train", &train_model, py::arg("features"), py::arg("train_edges"), py::arg("test_edges"),
        py::arg("config") = py::dict(), py::arg("keep_best") = true,
        "Trains one model. config takes the same keys as the config file. With keep_best the returned model "
        "is the accepted checkpoint, otherwise the final state.");

  m.def(
      "load",
      [](const std::string& path, const FeatureMatrix& x, std::size_t n, const EdgeArray& train_edges) {
        Model s{load_checkpoint(path), x, build_graph(n, to_edges(train_edges)), {}};
        return s;
      },
      py::arg("path"), py::arg("features"), py::arg("n_vertices"), py::arg("train_edges"));

  m.def("oracle_suites", [] {
    std::vector<std::string> out;
    for (auto s : oracle::suite_names()) out.emplace_back(s);
    return out;
  });
  m.def(
      "run_oracle",
      [](const std::string& suite, std::uint64_t seed, std::size_t n_cases) {
        py::list out;
        for (const auto& c : oracle::run_suite(suite, {seed, n_cases})) {
          py::dict d;
          d["name"] = c.name;
          d["passed"] = c.passed;
          d["error"] = c.error;
          d["tolerance"] = c.tolerance;
          d["detail"] = c.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("suite"), py::arg("seed") = 20240601, py::arg("n_cases") = 60);
}
