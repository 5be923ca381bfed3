#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "acvae/bp_refine.hpp"
#include "acvae/config.hpp"
#include "acvae/dataset.hpp"
#include "acvae/error.hpp"
#include "acvae/eval.hpp"
#include "acvae/experiment.hpp"
#include "acvae/formats.hpp"
#include "acvae/oracles.hpp"
#include "acvae/trainer.hpp"

namespace fs = std::filesystem;
using namespace acvae;

namespace {

const std::vector<std::string> kConfigKeys = {"mode",       "latent_dim",     "hidden_encoder", "hidden_corr",
                                              "tau",        "gamma",          "alpha",          "lr",
                                              "batch_vertices", "batch_edges", "epochs",        "eval_every",
                                              "seed",       "mst_sense",      "mc_samples"};

// Training flags mirror the config keys (--latent-dim for latent_dim).
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;
  std::vector<std::string> assignments;

  void attach(CLI::App* app) {
    for (const auto& key : kConfigKeys) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      options[key] = app->add_option(flag, values[key], "config key " + key);
    }
    app->add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
    app->add_option("--set", assignments, "extra key=value overrides");
  }

  TrainConfig resolve() const {
    KeyValues overrides;
    for (const auto& a : assignments) {
      for (const auto& [k, v] : parse_key_values(a, "--set")) overrides[k] = v;
    }
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) overrides[key] = values.at(key);
    }
    const fs::path file(config_file);
    return resolve_config(config_file.empty() ? nullptr : &file, overrides);
  }
};

struct SplitFiles {
  std::string train_edges;
  std::string test_edges;
  std::string features;
  bool bidirectional_only = false;

  void attach(CLI::App* app) {
    app->add_option("--train-edges", train_edges, "train edge list (as written by `split`)")->required();
    app->add_option("--test-edges", test_edges, "heldout edge list")->required();
    app->add_option("--features", features, "feature file (triplets or dense CSV)")->required();
    app->add_flag("--bidirectional-only", bidirectional_only, "keep only edges listed in both directions");
  }
};

struct LoadedSplit {
  std::vector<std::string> ids;
  SplitDataset split;
  FeatureMatrix x;
};

LoadedSplit load_split(const SplitFiles& files) {
  EdgeList train = read_edge_list(files.train_edges, {files.bidirectional_only});
  const auto index = id_index(train.vertex_ids);
  const std::vector<Edge> test = read_edges_with_ids(files.test_edges, index);
  LoadedSplit out;
  out.split = make_split(train.vertex_ids.size(), train.edges, test);
  const SparseFeatures features = read_features(files.features, index);
  out.x = FeatureMatrix(features.toDense());
  out.ids = std::move(train.vertex_ids);
  return out;
}

Dataset load_or_generate(const std::string& edges, const std::string& features, bool benchmark, bool bidirectional) {
  if (benchmark) {
    Dataset ds = generate_synthetic(benchmark_spec());
    ds.features = tfidf(ds.features);
    return ds;
  }
  if (edges.empty() || features.empty()) throw InputError("give --edges and --features, or --benchmark");
  return load_dataset(edges, features, {bidirectional});
}

std::vector<EdgeIndex> forest_edges(const TrainState& state) {
  if (!state.forest) return {};
  return {state.forest->edge_indices().begin(), state.forest->edge_indices().end()};
}

Checkpoint snapshot(const Trainer& trainer) {
  return {trainer.config(), trainer.state().params.feature_dim, trainer.state().params, trainer.state().w,
          forest_edges(trainer.state()), trainer.state().epoch};
}

std::optional<SpanningForest> checkpoint_forest(const Checkpoint& ckpt, const Graph& g) {
  if (!adapts_weights(ckpt.config.mode)) return std::nullopt;
  for (EdgeIndex e : ckpt.forest_edges) {
    if (e >= g.n_edges()) throw InputError("checkpoint forest does not match the train graph");
  }
  return SpanningForest(g, ckpt.forest_edges);
}

int cmd_generate(const SyntheticSpec& spec, bool use_tfidf, const std::string& edges, const std::string& features) {
  Dataset ds = generate_synthetic(spec);
  if (use_tfidf) ds.features = tfidf(ds.features);
  save_dataset(ds, edges, features);
  std::printf("wrote %zu vertices, %zu edges, %zu features\n", ds.n_vertices(), ds.graph.n_edges(), ds.feature_dim());
  return 0;
}

int cmd_tfidf(const std::string& edges, const std::string& features, const std::string& out) {
  const EdgeList list = read_edge_list(edges);
  const auto index = id_index(list.vertex_ids);
  write_features(out, tfidf(read_features(features, index)), list.vertex_ids);
  return 0;
}

int cmd_split(const std::string& edges, bool bidirectional, std::uint64_t seed, const std::string& train_out,
              const std::string& test_out) {
  const EdgeList list = read_edge_list(edges, {bidirectional});
  const Graph g = build_graph(list.vertex_ids.size(), list.edges);
  const SplitDataset split = split_edges(g, seed);
  write_edge_list(train_out, list.vertex_ids, split.train_graph.edges());
  // Heldout file lists edges only; vertex declarations live in the train file.
  std::ofstream out(test_out);
  if (!out) throw InputError("cannot write " + test_out);
  for (const Edge& e : split.test_edges) out << list.vertex_ids[e.u] << '\t' << list.vertex_ids[e.v] << '\n';
  std::printf("train edges %zu, heldout edges %zu\n", split.train_graph.n_edges(), split.test_edges.size());
  return 0;
}

int cmd_train(const SplitFiles& files, const ConfigFlags& flags, const std::string& out_dir, bool quiet) {
  const TrainConfig cfg = flags.resolve();
  const LoadedSplit data = load_split(files);
  fs::create_directories(out_dir);
  {
    std::ofstream conf(fs::path(out_dir) / "config.txt");
    conf << format_key_values(to_key_values(cfg));
  }
  std::ofstream metrics(fs::path(out_dir) / "metrics.jsonl");
  Trainer trainer(cfg, data.x, data.split);
  try {
    trainer.run([&](const MetricRecord& rec) {
      append_metrics(metrics, rec);
      metrics.flush();
      if (rec.accepted) save_checkpoint(fs::path(out_dir) / "best.ckpt", snapshot(trainer));
      if (!quiet) {
        std::printf("epoch %4zu  objective %.3f  train NCRR %.4f  test NCRR %.4f%s\n", rec.epoch,
                    rec.train_loss.elbo(), rec.train_ncrr, rec.test_ncrr, rec.accepted ? "  *" : "");
      }
    });
  } catch (const TrainingError&) {
    Checkpoint last = snapshot(trainer);
    last.params = trainer.last_good();
    save_checkpoint(fs::path(out_dir) / "last_good.ckpt", last);
    throw;
  }
  save_checkpoint(fs::path(out_dir) / "final.ckpt", snapshot(trainer));
  const BestRecord& best = trainer.state().best;
  std::printf("best epoch %zu: test NCRR %.4f (unrefined %.4f)\n", best.epoch, best.test_ncrr, best.test_ncrr_unrefined);
  return 0;
}

int cmd_eval(const SplitFiles& files, const std::string& ckpt_path, bool no_refine, const std::string& report) {
  const LoadedSplit data = load_split(files);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const auto forest = checkpoint_forest(ckpt, data.split.train_graph);
  const DistanceTable dist = distances_for_mode(ckpt.config.mode, ckpt.params, data.x, data.split.train_graph,
                                                forest ? &*forest : nullptr, !no_refine);
  const RankingReport r = ncrr(dist, data.split);
  if (!report.empty()) {
    std::ofstream out(report);
    if (!out) throw InputError("cannot write " + report);
    write_ranking(out, r, data.ids);
  }
  std::printf("mode %s  test NCRR %.6f over %zu vertices\n", std::string(to_string(ckpt.config.mode)).c_str(),
              r.mean_ncrr, r.n_ranked);
  return 0;
}

int cmd_compare(const Dataset& ds, const ConfigFlags& flags, const std::vector<std::string>& mode_names,
                const std::vector<std::uint64_t>& seeds, const std::string& out) {
  const TrainConfig base = flags.resolve();
  std::vector<Mode> modes;
  for (const auto& m : mode_names) modes.push_back(parse_mode(m));
  std::ofstream cells_out;
  if (!out.empty()) {
    cells_out.open(out);
    if (!cells_out) throw InputError("cannot write " + out);
  }
  const FeatureMatrix x = ds.dense_features();
  const auto cells = run_matrix(x, ds.graph, base, modes, seeds, [&](const CellResult& c) {
    std::printf("%-13s seed %llu  test NCRR %.4f  unrefined %.4f  final objective %.2f  (%.1fs)\n",
                std::string(to_string(c.mode)).c_str(), static_cast<unsigned long long>(c.seed), c.test_ncrr,
                c.test_ncrr_unrefined, c.final_train_objective, c.seconds);
    std::fflush(stdout);
    if (cells_out) {
      cells_out << "{\"mode\":\"" << to_string(c.mode) << "\",\"seed\":" << c.seed << ",\"test_ncrr\":" << c.test_ncrr
                << ",\"test_ncrr_unrefined\":" << c.test_ncrr_unrefined
                << ",\"final_train_objective\":" << c.final_train_objective << ",\"best_epoch\":" << c.best_epoch
                << "}\n";
    }
  });
  std::printf("\n%s", format_table(cells).c_str());
  return 0;
}

int cmd_export(const SplitFiles& files, const std::string& ckpt_path, const std::string& out_dir) {
  const LoadedSplit data = load_split(files);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Graph& g = data.split.train_graph;
  fs::create_directories(out_dir);

  const auto q = encode_all(ckpt.params, data.x);
  std::ofstream emb(fs::path(out_dir) / "embeddings.tsv");
  for (std::size_t v = 0; v < q.size(); ++v) {
    emb << data.ids[v];
    for (double m : q[v].mean) emb << '\t' << m;
    emb << '\n';
  }

  const auto forest = checkpoint_forest(ckpt, g);
  if (forest) {
    std::ofstream fe(fs::path(out_dir) / "forest.tsv");
    for (EdgeIndex e : forest->edge_indices()) {
      const auto [u, v] = g.edge(e);
      const PairGaussian p = encode_pair(ckpt.params, data.x.row(u).transpose(), data.x.row(v).transpose());
      fe << data.ids[u] << '\t' << data.ids[v];
      for (double r : p.rho) fe << '\t' << r;
      fe << '\n';
    }
  }
  write_matrix(fs::path(out_dir) / "distances.bin",
               distances_for_mode(ckpt.config.mode, ckpt.params, data.x, g, forest ? &*forest : nullptr, true));
  std::printf("exported %zu embeddings to %s\n", q.size(), out_dir.c_str());
  return 0;
}

int cmd_oracle(const std::string& suite, std::uint64_t seed, std::size_t cases) {
  std::vector<std::string_view> names;
  if (suite == "all") {
    names = oracle::suite_names();
  } else {
    names.push_back(suite);
  }
  bool ok = true;
  for (auto name : names) {
    for (const auto& c : oracle::run_suite(name, {seed, cases})) {
      std::printf("[%s] %s: %s  (error %.3g, tolerance %.3g) %s\n", c.passed ? "PASS" : "FAIL",
                  std::string(name).c_str(), c.name.c_str(), c.error, c.tolerance, c.detail.c_str());
      ok = ok && c.passed;
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive correlated variational auto-encoders for graph-structured data"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "write a planted-partition dataset");
  SyntheticSpec spec;
  bool gen_tfidf = false, gen_benchmark = false;
  std::string gen_edges, gen_features;
  generate->add_option("--vertices", spec.n_vertices);
  generate->add_option("--clusters", spec.n_clusters);
  generate->add_option("--p-intra", spec.p_intra);
  generate->add_option("--p-inter", spec.p_inter);
  generate->add_option("--vocab", spec.vocab_size);
  generate->add_option("--words", spec.words_per_vertex);
  generate->add_option("--topic-strength", spec.topic_strength);
  generate->add_option("--topic-words", spec.topic_words);
  generate->add_option("--seed", spec.seed);
  generate->add_flag("--benchmark", gen_benchmark, "use the fixed benchmark settings");
  generate->add_flag("--tfidf", gen_tfidf, "write tf-idf features instead of counts");
  generate->add_option("--out-edges", gen_edges)->required();
  generate->add_option("--out-features", gen_features)->required();

  auto* features_cmd = app.add_subcommand("features", "feature preprocessing");
  features_cmd->require_subcommand(1);
  auto* tfidf_cmd = features_cmd->add_subcommand("tfidf", "turn count features into tf-idf features");
  std::string tf_edges, tf_features, tf_out;
  tfidf_cmd->add_option("--edges", tf_edges, "edge list defining the vertex ids")->required();
  tfidf_cmd->add_option("--features", tf_features)->required();
  tfidf_cmd->add_option("--out", tf_out)->required();

  auto* split = app.add_subcommand("split", "hold out max(1, degree/20) edges per vertex");
  std::string split_edges_path, split_train, split_test;
  std::uint64_t split_seed = 0;
  bool split_bidir = false;
  split->add_option("--edges", split_edges_path)->required();
  split->add_option("--seed", split_seed);
  split->add_flag("--bidirectional-only", split_bidir);
  split->add_option("--out-train", split_train)->required();
  split->add_option("--out-test", split_test)->required();

  auto* train = app.add_subcommand("train", "train one model; writes checkpoints and a metrics log");
  SplitFiles train_files;
  ConfigFlags train_flags;
  std::string train_out;
  bool train_quiet = false;
  train_files.attach(train);
  train_flags.attach(train);
  train->add_option("--out", train_out, "output directory")->required();
  train->add_flag("--quiet", train_quiet);

  auto* eval = app.add_subcommand("eval", "rank heldout edges with a checkpoint");
  SplitFiles eval_files;
  std::string eval_ckpt, eval_report;
  bool eval_no_refine = false;
  eval_files.attach(eval);
  eval->add_option("--checkpoint", eval_ckpt)->required()->check(CLI::ExistingFile);
  eval->add_flag("--no-refine", eval_no_refine, "ACVAE: skip belief-propagation refinement");
  eval->add_option("--report", eval_report, "per-vertex TSV report");

  auto* compare = app.add_subcommand("compare", "train every mode on every seed and summarize");
  std::string cmp_edges, cmp_features, cmp_out;
  bool cmp_benchmark = false, cmp_bidir = false;
  std::vector<std::string> cmp_modes = {"vae", "cvae_ind", "cvae_corr", "acvae_saddle", "acvae_eb"};
  std::size_t cmp_n_seeds = 5;
  std::vector<std::uint64_t> cmp_seeds;
  ConfigFlags cmp_flags;
  compare->add_option("--edges", cmp_edges);
  compare->add_option("--features", cmp_features);
  compare->add_flag("--benchmark", cmp_benchmark, "use the built-in synthetic benchmark");
  compare->add_flag("--bidirectional-only", cmp_bidir);
  compare->add_option("--modes", cmp_modes)->delimiter(',');
  auto* n_seeds_opt = compare->add_option("--seeds", cmp_n_seeds, "number of seeds; runs use seeds 1..N")
                          ->check(CLI::PositiveNumber);
  compare->add_option("--seed-list", cmp_seeds, "explicit seeds")->delimiter(',')->excludes(n_seeds_opt);
  compare->add_option("--out", cmp_out, "per-run JSONL");
  cmp_flags.attach(compare);

  auto* export_cmd = app.add_subcommand("export", "embedding means, forest with correlations, distance matrix");
  SplitFiles exp_files;
  std::string exp_ckpt, exp_out;
  exp_files.attach(export_cmd);
  export_cmd->add_option("--checkpoint", exp_ckpt)->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--out", exp_out, "output directory")->required();

  auto* oracle_cmd = app.add_subcommand("oracle", "run the brute-force verification suites");
  std::string suite = "all";
  oracle::SuiteOptions suite_opts;
  oracle_cmd->add_option("--suite", suite, "forest, gaussian, gradient, pi_update, objective, bp, ncrr or all");
  oracle_cmd->add_option("--seed", suite_opts.seed);
  oracle_cmd->add_option("--cases", suite_opts.n_cases);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*generate) {
      if (gen_benchmark) {
        spec = benchmark_spec();
        gen_tfidf = true;
      }
      return cmd_generate(spec, gen_tfidf, gen_edges, gen_features);
    }
    if (*tfidf_cmd) return cmd_tfidf(tf_edges, tf_features, tf_out);
    if (*split) return cmd_split(split_edges_path, split_bidir, split_seed, split_train, split_test);
    if (*train) return cmd_train(train_files, train_flags, train_out, train_quiet);
    if (*eval) return cmd_eval(eval_files, eval_ckpt, eval_no_refine, eval_report);
    if (*compare) {
      if (cmp_seeds.empty()) {
        for (std::uint64_t s = 1; s <= cmp_n_seeds; ++s) cmp_seeds.push_back(s);
      }
      return cmd_compare(load_or_generate(cmp_edges, cmp_features, cmp_benchmark, cmp_bidir), cmp_flags, cmp_modes,
                         cmp_seeds, cmp_out);
    }
    if (*export_cmd) return cmd_export(exp_files, exp_ckpt, exp_out);
    if (*oracle_cmd) return cmd_oracle(suite, suite_opts.seed, suite_opts.n_cases);
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "training failed: %s\n", e.what());
    return 3;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
