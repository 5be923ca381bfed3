#include "acvae/formats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

#include "json.hpp"

#include "acvae/config.hpp"
#include "acvae/error.hpp"

namespace acvae {

namespace {

constexpr char kMatrixMagic[8] = {'A', 'C', 'V', 'M', 'A', 'T', '0', '1'};
constexpr char kBundleMagic[8] = {'A', 'C', 'V', 'B', 'N', 'D', 'L', '1'};
constexpr std::uint32_t kBundleVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw InputError(path.string() + ": truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void expect_magic(std::istream& in, const char (&magic)[8], const std::filesystem::path& path) {
  char got[8];
  if (!in.read(got, 8) || std::memcmp(got, magic, 8) != 0) {
    throw InputError(path.string() + ": not a " + std::string(magic, 8) + " file");
  }
}

std::ofstream open_binary_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::ifstream open_binary_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

// Guards allocations against corrupt headers.
std::size_t checked_size(std::uint64_t rows, std::uint64_t cols, const std::filesystem::path& path) {
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 32;
  if (rows > kLimit || cols > kLimit || (cols != 0 && rows > kLimit / cols)) {
    throw InputError(path.string() + ": implausible array shape");
  }
  return static_cast<std::size_t>(rows * cols);
}

NamedArray row_array(std::span<const double> values) {
  return {1, values.size(), std::vector<double>(values.begin(), values.end())};
}

const NamedArray& require(const ArrayBundle& b, const std::string& name, const std::filesystem::path& path) {
  const auto it = b.arrays.find(name);
  if (it == b.arrays.end()) throw InputError(path.string() + ": checkpoint lacks array '" + name + "'");
  return it->second;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  auto out = open_binary_out(path);
  out.write(kMatrixMagic, 8);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
  }
  if (!out) throw InputError("write failed for " + path.string());
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  auto in = open_binary_in(path);
  expect_magic(in, kMatrixMagic, path);
  const auto rows = get<std::uint64_t>(in, path);
  const auto cols = get<std::uint64_t>(in, path);
  checked_size(rows, cols, path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>(in, path);
  }
  return m;
}

void write_bundle(const std::filesystem::path& path, const ArrayBundle& bundle) {
  auto out = open_binary_out(path);
  out.write(kBundleMagic, 8);
  put<std::uint32_t>(out, kBundleVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.metadata.size()));
  out.write(bundle.metadata.data(), static_cast<std::streamsize>(bundle.metadata.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.arrays.size()));
  for (const auto& [name, a] : bundle.arrays) {
    if (a.data.size() != a.rows * a.cols) throw InputError("array '" + name + "' has inconsistent shape");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, a.rows);
    put<std::uint64_t>(out, a.cols);
    for (double v : a.data) put<double>(out, v);
  }
  if (!out) throw InputError("write failed for " + path.string());
}

ArrayBundle read_bundle(const std::filesystem::path& path) {
  auto in = open_binary_in(path);
  expect_magic(in, kBundleMagic, path);
  const auto version = get<std::uint32_t>(in, path);
  if (version != kBundleVersion) throw InputError(path.string() + ": unsupported bundle version " + std::to_string(version));
  ArrayBundle bundle;
  const auto meta_len = get<std::uint32_t>(in, path);
  bundle.metadata.resize(meta_len);
  if (!in.read(bundle.metadata.data(), meta_len)) throw InputError(path.string() + ": truncated file");
  const auto count = get<std::uint32_t>(in, path);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw InputError(path.string() + ": truncated file");
    NamedArray a;
    a.rows = get<std::uint64_t>(in, path);
    a.cols = get<std::uint64_t>(in, path);
    a.data.resize(checked_size(a.rows, a.cols, path));
    for (double& v : a.data) v = get<double>(in, path);
    bundle.arrays.emplace(std::move(name), std::move(a));
  }
  return bundle;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ArrayBundle b;
  b.metadata = format_key_values(to_key_values(ckpt.config));
  const ModelParams& p = ckpt.params;
  b.arrays["shape"] = row_array(std::vector<double>{
      static_cast<double>(p.feature_dim), static_cast<double>(p.latent_dim),
      static_cast<double>(p.encoder.n_hidden()), static_cast<double>(p.corr.n_hidden())});
  b.arrays["encoder"] = row_array(p.encoder.params());
  b.arrays["corr"] = row_array(p.corr.params());
  b.arrays["decoder"] = row_array(p.decoder.params());
  b.arrays["weights"] = row_array(ckpt.weights.values);
  std::vector<double> forest(ckpt.forest_edges.begin(), ckpt.forest_edges.end());
  b.arrays["forest_edges"] = row_array(forest);
  b.arrays["epoch"] = row_array(std::vector<double>{static_cast<double>(ckpt.epoch)});
  write_bundle(path, b);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const ArrayBundle b = read_bundle(path);
  Checkpoint ckpt;
  apply_config(ckpt.config, parse_key_values(b.metadata, path.string()));
  const auto& shape = require(b, "shape", path).data;
  if (shape.size() != 4) throw InputError(path.string() + ": bad shape array");
  const auto dim = [&](std::size_t k) { return static_cast<std::size_t>(shape[k]); };
  ckpt.feature_dim = dim(0);
  ckpt.params = ModelParams::create(dim(0), dim(1), dim(2), dim(3), 0);
  for (const auto& [name, net] : {std::pair{"encoder", &ckpt.params.encoder}, std::pair{"corr", &ckpt.params.corr},
                                  std::pair{"decoder", &ckpt.params.decoder}}) {
    const auto& data = require(b, name, path).data;
    if (data.size() != net->size()) throw InputError(path.string() + ": array '" + name + "' has the wrong size");
    std::copy(data.begin(), data.end(), net->params().begin());
  }
  ckpt.weights.values = require(b, "weights", path).data;
  for (double e : require(b, "forest_edges", path).data) ckpt.forest_edges.push_back(static_cast<EdgeIndex>(e));
  const auto& epoch = require(b, "epoch", path).data;
  ckpt.epoch = epoch.empty() ? 0 : static_cast<std::size_t>(epoch.front());
  return ckpt;
}

std::string metric_json(const MetricRecord& rec) {
  nlohmann::ordered_json j;
  j["epoch"] = rec.epoch;
  j["step"] = rec.step;
  j["mode"] = std::string(to_string(rec.mode));
  j["reconstruction"] = rec.train_loss.reconstruction;
  j["singleton_kl"] = rec.train_loss.singleton_kl;
  j["pairwise_penalty"] = rec.train_loss.pairwise_penalty;
  j["train_objective"] = rec.train_loss.elbo();
  j["train_ncrr"] = rec.train_ncrr;
  j["test_ncrr"] = rec.test_ncrr;
  j["test_ncrr_unrefined"] = rec.test_ncrr_unrefined;
  j["w_sum"] = rec.w_sum;
  j["forest_edit_distance"] = rec.forest_edit_distance;
  j["accepted"] = rec.accepted;
  return j.dump();
}

void append_metrics(std::ostream& out, const MetricRecord& rec) { out << metric_json(rec) << '\n'; }

void write_ranking(std::ostream& out, const RankingReport& report, const std::vector<std::string>& vertex_ids) {
  out << "vertex\theldout\tcandidates\tcrr\tncrr\n";
  for (std::size_t i = 0; i < report.crr.size(); ++i) {
    if (report.heldout[i] == 0) continue;
    out << (i < vertex_ids.size() ? vertex_ids[i] : std::to_string(i)) << '\t' << report.heldout[i] << '\t'
        << report.candidates[i] << '\t' << report.crr[i] << '\t' << report.ncrr[i] << '\n';
  }
  out << "# mean_ncrr\t" << report.mean_ncrr << "\t# ranked_vertices\t" << report.n_ranked << '\n';
}

}  // namespace acvae
