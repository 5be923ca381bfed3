#include "acvae/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "acvae/error.hpp"

namespace acvae {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw InputError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(origin, lineno, "expected key=value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError(origin, lineno, "empty key");
    if (!kv.emplace(key, value).second) throw ParseError(origin, lineno, "key '" + key + "' repeated");
  }
  return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_key_values(text.str(), path.string());
}

void apply_config(TrainConfig& cfg, const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "mode") {
      cfg.mode = parse_mode(value);
    } else if (key == "latent_dim") {
      cfg.latent_dim = parse_number<std::size_t>(key, value);
    } else if (key == "hidden_encoder") {
      cfg.hidden_encoder = parse_number<std::size_t>(key, value);
    } else if (key == "hidden_corr") {
      cfg.hidden_corr = parse_number<std::size_t>(key, value);
    } else if (key == "tau") {
      cfg.tau = parse_number<double>(key, value);
    } else if (key == "gamma") {
      cfg.gamma = parse_number<double>(key, value);
    } else if (key == "alpha") {
      cfg.alpha = parse_number<double>(key, value);
    } else if (key == "lr") {
      cfg.lr = parse_number<double>(key, value);
    } else if (key == "batch_vertices") {
      cfg.batch_vertices = parse_number<std::size_t>(key, value);
    } else if (key == "batch_edges") {
      cfg.batch_edges = parse_number<std::size_t>(key, value);
    } else if (key == "epochs") {
      cfg.epochs = parse_number<std::size_t>(key, value);
    } else if (key == "eval_every") {
      cfg.eval_every = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "mc_samples") {
      cfg.mc_samples = parse_number<std::size_t>(key, value);
    } else if (key == "mst_sense") {
      if (value == "min") {
        cfg.mst_sense = Sense::min;
      } else if (value == "max") {
        cfg.mst_sense = Sense::max;
      } else if (value == "default") {
        cfg.mst_sense.reset();
      } else {
        throw InputError("config key 'mst_sense' must be min, max or default");
      }
    } else {
      throw InputError("unknown config key '" + key + "'");
    }
  }
  cfg.validate();
}

KeyValues to_key_values(const TrainConfig& cfg) {
  KeyValues kv;
  kv["mode"] = std::string(to_string(cfg.mode));
  kv["latent_dim"] = std::to_string(cfg.latent_dim);
  kv["hidden_encoder"] = std::to_string(cfg.hidden_encoder);
  kv["hidden_corr"] = std::to_string(cfg.hidden_corr);
  kv["tau"] = format_double(cfg.tau);
  kv["gamma"] = format_double(cfg.gamma);
  kv["alpha"] = format_double(cfg.alpha);
  kv["lr"] = format_double(cfg.lr);
  kv["batch_vertices"] = std::to_string(cfg.batch_vertices);
  kv["batch_edges"] = std::to_string(cfg.batch_edges);
  kv["epochs"] = std::to_string(cfg.epochs);
  kv["eval_every"] = std::to_string(cfg.eval_every);
  kv["seed"] = std::to_string(cfg.seed);
  kv["mc_samples"] = std::to_string(cfg.mc_samples);
  kv["mst_sense"] = !cfg.mst_sense ? "default" : (*cfg.mst_sense == Sense::min ? "min" : "max");
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
  return out;
}

TrainConfig resolve_config(const std::filesystem::path* config_file, const KeyValues& overrides) {
  TrainConfig cfg;
  if (config_file != nullptr) apply_config(cfg, read_config_file(*config_file));
  apply_config(cfg, overrides);
  return cfg;
}

}  // namespace acvae
