#include "acvae/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "acvae/error.hpp"

namespace acvae {

namespace {

std::vector<std::string> split_fields(std::string_view line, bool csv) {
  std::vector<std::string> out;
  if (csv) {
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      std::string field(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      const auto a = field.find_first_not_of(" \t\r");
      const auto b = field.find_last_not_of(" \t\r");
      out.push_back(a == std::string::npos ? std::string() : field.substr(a, b - a + 1));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return out;
  }
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && (line[k] == ' ' || line[k] == '\t' || line[k] == '\r')) ++k;
    const std::size_t start = k;
    while (k < line.size() && line[k] != ' ' && line[k] != '\t' && line[k] != '\r') ++k;
    if (k > start) out.emplace_back(line.substr(start, k - start));
  }
  return out;
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r") == std::string_view::npos; }

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(path.string(), line, "bad number '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(path.string(), line, "bad index '" + s + "'");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::unordered_map<std::string, Vertex> id_index(std::span<const std::string> vertex_ids) {
  std::unordered_map<std::string, Vertex> index;
  for (Vertex v = 0; v < vertex_ids.size(); ++v) index.emplace(vertex_ids[v], v);
  return index;
}

EdgeList read_edge_list(const std::filesystem::path& path, const EdgeListOptions& opts) {
  auto in = open_in(path);
  EdgeList out;
  std::unordered_map<std::string, Vertex> index;
  const auto intern = [&](const std::string& id) {
    const auto [it, inserted] = index.emplace(id, static_cast<Vertex>(out.vertex_ids.size()));
    if (inserted) out.vertex_ids.push_back(id);
    return it->second;
  };
  std::vector<Edge> directed;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = strip_comment(line);
    if (blank(body)) continue;
    const auto fields = split_fields(body, false);
    if (fields.size() == 1) {
      intern(fields[0]);
    } else if (fields.size() == 2) {
      const Vertex a = intern(fields[0]);
      const Vertex b = intern(fields[1]);
      directed.push_back({a, b});
    } else {
      throw ParseError(path.string(), lineno, "expected 'u<TAB>v' or a single vertex id");
    }
  }
  if (opts.bidirectional_only) {
    const std::set<Edge> seen(directed.begin(), directed.end());
    for (const Edge& e : directed) {
      if (e.u != e.v && seen.count(Edge{e.v, e.u})) out.edges.push_back(e);
    }
  } else {
    out.edges = std::move(directed);
  }
  return out;
}

std::vector<Edge> read_edges_with_ids(const std::filesystem::path& path,
                                      const std::unordered_map<std::string, Vertex>& index) {
  auto in = open_in(path);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = strip_comment(line);
    if (blank(body)) continue;
    const auto fields = split_fields(body, false);
    if (fields.size() == 1) {
      if (!index.count(fields[0])) throw ParseError(path.string(), lineno, "unknown vertex id '" + fields[0] + "'");
      continue;
    }
    if (fields.size() != 2) throw ParseError(path.string(), lineno, "expected 'u<TAB>v'");
    const auto a = index.find(fields[0]);
    const auto b = index.find(fields[1]);
    if (a == index.end() || b == index.end()) {
      throw ParseError(path.string(), lineno, "edge references an unknown vertex id");
    }
    edges.push_back({a->second, b->second});
  }
  return edges;
}

void write_edge_list(const std::filesystem::path& path, std::span<const std::string> vertex_ids,
                     std::span<const Edge> edges) {
  auto out = open_out(path);
  out << "# vertices\n";
  for (const auto& id : vertex_ids) out << id << '\n';
  out << "# edges\n";
  for (const Edge& e : edges) out << vertex_ids[e.u] << '\t' << vertex_ids[e.v] << '\n';
}

SparseFeatures read_features(const std::filesystem::path& path,
                             const std::unordered_map<std::string, Vertex>& index) {
  auto in = open_in(path);
  std::vector<Eigen::Triplet<double>> triplets;
  std::size_t width = 0;
  bool csv = false;
  bool header_seen = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = strip_comment(line);
    if (blank(body)) continue;
    if (!header_seen) {
      header_seen = true;
      csv = body.find(',') != std::string_view::npos;
      if (csv) {
        const auto header = split_fields(body, true);
        if (header.empty() || header[0] != "node") {
          throw ParseError(path.string(), lineno, "dense CSV header must start with 'node'");
        }
        width = header.size() - 1;
        continue;
      }
    }
    const auto fields = split_fields(body, csv);
    const auto it = index.find(fields.empty() ? std::string() : fields[0]);
    if (it == index.end()) throw ParseError(path.string(), lineno, "features reference unknown node '" + fields[0] + "'");
    if (csv) {
      if (fields.size() != width + 1) throw ParseError(path.string(), lineno, "row width differs from the header");
      for (std::size_t k = 0; k < width; ++k) {
        const double v = parse_double(fields[k + 1], path, lineno);
        if (v < 0.0) throw ParseError(path.string(), lineno, "negative feature value");
        if (v != 0.0) triplets.emplace_back(static_cast<int>(it->second), static_cast<int>(k), v);
      }
    } else {
      if (fields.size() != 3) throw ParseError(path.string(), lineno, "expected 'node<TAB>index<TAB>value'");
      const std::size_t k = parse_index(fields[1], path, lineno);
      const double v = parse_double(fields[2], path, lineno);
      if (v < 0.0) throw ParseError(path.string(), lineno, "negative feature value");
      width = std::max(width, k + 1);
      triplets.emplace_back(static_cast<int>(it->second), static_cast<int>(k), v);
    }
  }
  SparseFeatures m(static_cast<Eigen::Index>(index.size()), static_cast<Eigen::Index>(width));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

void write_features(const std::filesystem::path& path, const SparseFeatures& features,
                    std::span<const std::string> vertex_ids) {
  auto out = open_out(path);
  out << "# node\tindex\tvalue (" << features.cols() << " columns)\n";
  for (Eigen::Index r = 0; r < features.outerSize(); ++r) {
    for (SparseFeatures::InnerIterator it(features, r); it; ++it) {
      out << vertex_ids[static_cast<std::size_t>(r)] << '\t' << it.col() << '\t' << format_double(it.value()) << '\n';
    }
  }
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != graph.n_vertices()) {
    throw InputError("feature rows (" + std::to_string(features.rows()) + ") differ from vertex count (" +
                     std::to_string(graph.n_vertices()) + ")");
  }
  if (features.cols() < 1) throw InputError("features need at least one column");
  if (vertex_ids.size() != graph.n_vertices()) throw InputError("vertex id list has the wrong length");
  for (Eigen::Index r = 0; r < features.outerSize(); ++r) {
    for (SparseFeatures::InnerIterator it(features, r); it; ++it) {
      if (!(it.value() >= 0.0)) throw InputError("features must be nonnegative");
    }
  }
}

FeatureMatrix Dataset::dense_features() const { return FeatureMatrix(features); }

Dataset load_dataset(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                     const EdgeListOptions& opts) {
  EdgeList list = read_edge_list(edge_path, opts);
  const auto index = id_index(list.vertex_ids);
  Dataset ds;
  ds.graph = build_graph(list.vertex_ids.size(), list.edges);
  ds.features = read_features(feature_path, index);
  ds.vertex_ids = std::move(list.vertex_ids);
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& edge_path,
                  const std::filesystem::path& feature_path) {
  ds.validate();
  write_edge_list(edge_path, ds.vertex_ids, ds.graph.edges());
  write_features(feature_path, ds.features, ds.vertex_ids);
  // The triplet format infers the width from the largest index; pin it with
  // an explicit zero when the last column is empty.
  bool last_used = false;
  for (Eigen::Index r = 0; r < ds.features.outerSize() && !last_used; ++r) {
    for (SparseFeatures::InnerIterator it(ds.features, r); it; ++it) last_used = last_used || it.col() == ds.features.cols() - 1;
  }
  if (!last_used && !ds.vertex_ids.empty()) {
    std::ofstream out(feature_path, std::ios::app);
    out << ds.vertex_ids.front() << '\t' << ds.features.cols() - 1 << "\t0\n";
  }
}

void SyntheticSpec::validate() const {
  if (n_vertices == 0 || n_clusters == 0 || vocab_size == 0 || words_per_vertex == 0 || topic_words == 0) {
    throw InputError("synthetic spec counts must be positive");
  }
  if (n_clusters > n_vertices) throw InputError("more clusters than vertices");
  if (topic_words > vocab_size) throw InputError("topic vocabulary larger than the vocabulary");
  for (double p : {p_intra, p_inter, topic_strength}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("synthetic probabilities must lie in [0, 1]");
  }
}

std::vector<std::size_t> synthetic_clusters(const SyntheticSpec& spec) {
  std::vector<std::size_t> cluster(spec.n_vertices);
  for (std::size_t v = 0; v < spec.n_vertices; ++v) cluster[v] = v * spec.n_clusters / spec.n_vertices;
  return cluster;
}

SyntheticSpec benchmark_spec() {
  SyntheticSpec spec;
  spec.seed = 7;
  return spec;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t n = spec.n_vertices;
  const auto cluster = synthetic_clusters(spec);

  std::vector<Edge> edges;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Vertex i = 0; i < n; ++i) {
    for (Vertex j = i + 1; j < n; ++j) {
      const double p = cluster[i] == cluster[j] ? spec.p_intra : spec.p_inter;
      if (unif(rng) < p) edges.push_back({i, j});
    }
  }

  std::vector<std::vector<std::size_t>> topics(spec.n_clusters);
  std::vector<std::size_t> words(spec.vocab_size);
  std::iota(words.begin(), words.end(), std::size_t{0});
  for (auto& topic : topics) {
    std::shuffle(words.begin(), words.end(), rng);
    topic.assign(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(spec.topic_words));
  }

  std::uniform_int_distribution<std::size_t> any_word(0, spec.vocab_size - 1);
  std::uniform_int_distribution<std::size_t> topic_word(0, spec.topic_words - 1);
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t v = 0; v < n; ++v) {
    std::map<std::size_t, double> counts;
    for (std::size_t w = 0; w < spec.words_per_vertex; ++w) {
      const std::size_t word = unif(rng) < spec.topic_strength ? topics[cluster[v]][topic_word(rng)] : any_word(rng);
      counts[word] += 1.0;
    }
    for (const auto& [word, c] : counts) {
      triplets.emplace_back(static_cast<int>(v), static_cast<int>(word), c);
    }
  }

  Dataset ds;
  ds.graph = build_graph(n, edges);
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.vocab_size));
  ds.features.setFromTriplets(triplets.begin(), triplets.end());
  ds.vertex_ids.resize(n);
  for (std::size_t v = 0; v < n; ++v) ds.vertex_ids[v] = "v" + std::to_string(v);
  return ds;
}

SparseFeatures tfidf(const SparseFeatures& counts) {
  const auto n = counts.rows();
  std::vector<double> df(static_cast<std::size_t>(counts.cols()), 0.0);
  for (Eigen::Index r = 0; r < counts.outerSize(); ++r) {
    for (SparseFeatures::InnerIterator it(counts, r); it; ++it) {
      if (it.value() != 0.0) df[static_cast<std::size_t>(it.col())] += 1.0;
    }
  }
  SparseFeatures out = counts;
  for (Eigen::Index r = 0; r < out.outerSize(); ++r) {
    double norm = 0.0;
    for (SparseFeatures::InnerIterator it(out, r); it; ++it) {
      const double idf = std::log((1.0 + static_cast<double>(n)) / (1.0 + df[static_cast<std::size_t>(it.col())])) + 1.0;
      it.valueRef() *= idf;
      norm += it.value() * it.value();
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (SparseFeatures::InnerIterator it(out, r); it; ++it) it.valueRef() /= norm;
    }
  }
  return out;
}

}  // namespace acvae
