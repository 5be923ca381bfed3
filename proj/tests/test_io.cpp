#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "acvae/config.hpp"
#include "acvae/dataset.hpp"
#include "acvae/error.hpp"
#include "acvae/formats.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace acvae;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("acvae_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("edge list parsing") {
  TempDir dir;
  write(dir / "e.tsv", "# header\na\tb\nb\ta\na\tb\n");
  write(dir / "f.tsv", "a\t0\t1.5\nb\t2\t1\n");
  const Dataset ds = load_dataset(dir / "e.tsv", dir / "f.tsv");
  CHECK(ds.n_vertices() == 2);
  CHECK(ds.graph.n_edges() == 1);
  CHECK(ds.feature_dim() == 3);
  CHECK(ds.features.coeff(0, 0) == 1.5);

  write(dir / "bad.tsv", "a\tb\n\nc d e\n");
  try {
    read_edge_list(dir / "bad.tsv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  write(dir / "g.tsv", "x\n");
  write(dir / "unk.tsv", "a\t0\t1\nzz\t1\t2\n");
  try {
    load_dataset(dir / "e.tsv", dir / "unk.tsv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  write(dir / "neg.tsv", "a\t0\t-1\n");
  CHECK_THROWS_AS(load_dataset(dir / "e.tsv", dir / "neg.tsv"), ParseError);
}

TEST_CASE("bidirectional-only edges") {
  TempDir dir;
  write(dir / "d.tsv", "a b\nb a\nb c\nc d\nd c\n");
  CHECK(read_edge_list(dir / "d.tsv").edges.size() == 5);
  const EdgeList both = read_edge_list(dir / "d.tsv", {true});
  const Graph g = build_graph(both.vertex_ids.size(), both.edges);
  CHECK(g.n_edges() == 2);
  CHECK(both.vertex_ids.size() == 4);
}

TEST_CASE("dense CSV features") {
  TempDir dir;
  write(dir / "e.tsv", "a\tb\n");
  write(dir / "f.csv", "node,w0,w1,w2\nb,0,2,0\na,1,0,3\n");
  const Dataset ds = load_dataset(dir / "e.tsv", dir / "f.csv");
  CHECK(ds.feature_dim() == 3);
  CHECK(ds.features.coeff(0, 2) == 3.0);
  CHECK(ds.features.coeff(1, 1) == 2.0);
}

TEST_CASE("dataset round trip") {
  TempDir dir;
  const Dataset ds = fixture::small_dataset();
  save_dataset(ds, dir / "e.tsv", dir / "f.tsv");
  const Dataset back = load_dataset(dir / "e.tsv", dir / "f.tsv");
  CHECK(back.vertex_ids == ds.vertex_ids);
  CHECK(std::vector<Edge>(back.graph.edges().begin(), back.graph.edges().end()) ==
        std::vector<Edge>(ds.graph.edges().begin(), ds.graph.edges().end()));
  CHECK(back.feature_dim() == ds.feature_dim());
  CHECK((back.dense_features() - ds.dense_features()).cwiseAbs().maxCoeff() == 0.0);
  save_dataset(back, dir / "e2.tsv", dir / "f2.tsv");
  CHECK(slurp(dir / "e.tsv") == slurp(dir / "e2.tsv"));
  CHECK(slurp(dir / "f.tsv") == slurp(dir / "f2.tsv"));
}

TEST_CASE("synthetic generator") {
  SyntheticSpec s;
  s.n_vertices = 60;
  s.p_inter = 0.0;
  s.p_intra = 0.5;
  s.seed = 4;
  const Dataset ds = generate_synthetic(s);
  CHECK(ds.graph.n_components() == s.n_clusters);
  const Dataset again = generate_synthetic(s);
  CHECK(std::vector<Edge>(again.graph.edges().begin(), again.graph.edges().end()) ==
        std::vector<Edge>(ds.graph.edges().begin(), ds.graph.edges().end()));
  CHECK((again.dense_features() - ds.dense_features()).cwiseAbs().maxCoeff() == 0.0);

  s.topic_strength = 0.8;
  const FeatureMatrix x = generate_synthetic(s).dense_features();
  const auto cl = synthetic_clusters(s);
  double intra = 0, inter = 0;
  std::size_t ni = 0, no = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      const double c = x.row(i).dot(x.row(j)) / (x.row(i).norm() * x.row(j).norm());
      if (cl[i] == cl[j]) {
        intra += c;
        ++ni;
      } else {
        inter += c;
        ++no;
      }
    }
  }
  CHECK(intra / ni > inter / no);

  SyntheticSpec bad;
  bad.p_intra = 1.5;
  CHECK_THROWS_AS(generate_synthetic(bad), InputError);
}

TEST_CASE("tfidf rows are unit length") {
  const Dataset ds = generate_synthetic(SyntheticSpec{});
  const FeatureMatrix x = Dataset{ds.graph, tfidf(ds.features), ds.vertex_ids}.dense_features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(x.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x.minCoeff() >= 0.0);
}

TEST_CASE("matrix and bundle files round trip bitwise") {
  TempDir dir;
  Eigen::MatrixXd m(3, 2);
  m << 1.0, -2.5, 1e-300, std::nextafter(1.0, 2.0), 0.1, -0.0;
  write_matrix(dir / "m.bin", m);
  const Eigen::MatrixXd back = read_matrix(dir / "m.bin");
  CHECK(back.rows() == 3);
  CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * 6) == 0);
  write_matrix(dir / "m2.bin", back);
  CHECK(slurp(dir / "m.bin") == slurp(dir / "m2.bin"));

  write(dir / "junk.bin", "not a matrix");
  CHECK_THROWS_AS(read_matrix(dir / "junk.bin"), InputError);
  const std::string good = slurp(dir / "m.bin");
  write(dir / "short.bin", good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(read_matrix(dir / "short.bin"), InputError);
}

TEST_CASE("checkpoint round trip") {
  TempDir dir;
  Checkpoint c;
  c.config.mode = Mode::acvae_eb;
  c.config.latent_dim = 3;
  c.config.mst_sense = Sense::min;
  c.config.tau = 0.875;
  c.params = ModelParams::create(9, 3, 5, 4, 7);
  c.feature_dim = 9;
  const Graph g = fixture::six();
  c.weights = uniform_mas_weights(g);
  c.forest_edges = {0, 1, 2, 4, 5};
  c.epoch = 42;
  save_checkpoint(dir / "c.bin", c);
  const Checkpoint b = load_checkpoint(dir / "c.bin");
  CHECK(b.config.mode == Mode::acvae_eb);
  CHECK(b.config.mst_sense == Sense::min);
  CHECK(b.config.tau == 0.875);
  CHECK(b.epoch == 42);
  CHECK(b.forest_edges == c.forest_edges);
  CHECK(b.weights.values == c.weights.values);
  for (std::size_t i = 0; i < c.params.n_params(); ++i) CHECK(b.params.param(i) == c.params.param(i));
  save_checkpoint(dir / "c2.bin", b);
  CHECK(slurp(dir / "c.bin") == slurp(dir / "c2.bin"));
}

TEST_CASE("config parsing and precedence") {
  const KeyValues kv = parse_key_values("# c\nmode = cvae_ind\n\nlr=0.01  # inline\n");
  CHECK(kv.at("mode") == "cvae_ind");
  CHECK(kv.at("lr") == "0.01");
  CHECK_THROWS_AS(parse_key_values("mode = vae\nmode = vae\n"), ParseError);
  try {
    parse_key_values("a = 1\nbroken\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  TrainConfig cfg;
  CHECK_THROWS_AS(apply_config(cfg, {{"nonsense", "1"}}), InputError);
  CHECK_THROWS_AS(apply_config(cfg, {{"alpha", "abc"}}), InputError);
  CHECK_THROWS_AS(apply_config(cfg, {{"alpha", "2"}}), InputError);

  TempDir dir;
  write(dir / "c.conf", "mode = cvae_corr\nepochs = 7\ngamma = 3\n");
  const fs::path file = dir / "c.conf";
  const TrainConfig r = resolve_config(&file, {{"epochs", "9"}});
  CHECK(r.mode == Mode::cvae_corr);
  CHECK(r.epochs == 9);
  CHECK(r.gamma == 3.0);
  CHECK(r.tau == 0.99);

  TrainConfig full;
  full.mode = Mode::acvae_eb;
  full.lr = 0.000123456789;
  full.mst_sense = Sense::max;
  TrainConfig again;
  apply_config(again, parse_key_values(format_key_values(to_key_values(full))));
  CHECK(to_key_values(again) == to_key_values(full));
  CHECK(again.lr == full.lr);
}

TEST_CASE("metric records are JSON lines") {
  MetricRecord rec;
  rec.epoch = 5;
  rec.mode = Mode::acvae_saddle;
  rec.train_loss.reconstruction = -10.0;
  rec.test_ncrr = 0.25;
  rec.accepted = true;
  std::ostringstream out;
  append_metrics(out, rec);
  append_metrics(out, rec);
  std::istringstream in(out.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("epoch") == 5);
    CHECK(j.at("mode") == "acvae_saddle");
    CHECK(j.at("test_ncrr") == 0.25);
    CHECK(j.at("accepted") == true);
    ++n;
  }
  CHECK(n == 2);
}
