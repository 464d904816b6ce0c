#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "setgen/checkpoint.hpp"
#include "setgen/config.hpp"
#include "setgen/errors.hpp"
#include "setgen/graph.hpp"
#include "setgen/hash.hpp"
#include "setgen/metrics.hpp"
#include "setgen/synthetic.hpp"
#include "setgen/trainer.hpp"
#include "setgen/vae.hpp"
#include "setgen/verify.hpp"

namespace setgen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

config::RunConfig load_or_default(const std::string& path) {
  return path.empty() ? config::parse_config("") : config::load_config(path);
}

// --seed, then SETGEN_SEED, then the config file.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t from_config) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SETGEN_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("SETGEN_SEED is not an unsigned integer: ") + env);
  }
  return from_config;
}

std::vector<PointSet> read_sets(const std::string& path) { return synth::read_dataset(path).sets; }

void write_sets(const fs::path& path, const std::vector<PointSet>& sets, const json& header) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  synth::SetDataset d{sets};
  synth::write_dataset(path.string(), d, header.dump(2));
}

void echo_config(const config::RunConfig& cfg) {
  std::cout << "# resolved config\n" << config::to_text(cfg) << std::flush;
}

json manifest_entry(const fs::path& p) {
  return {{"path", p.string()}, {"git_sha1", git_file_hash(p.string())}};
}

metrics::MetricMap evaluate(const vae::SetVae& model, const std::vector<PointSet>& data,
                            const config::RunConfig& cfg, std::uint64_t seed, bool extrapolate) {
  metrics::MetricMap m;
  Rng rng = Rng(seed).split(0xe7a1);
  const auto gen = vae::generate(model, cfg.eval.generate_count, rng, extrapolate);
  const double nb = cfg.synth.neighbor_distance;
  m["valency_w2"] = metrics::valency_w2(gen.sets, data, nb);
  m["incorrect_valency_pct"] = metrics::incorrect_valency_pct(gen.sets, cfg.synth.max_neighbors, nb);
  Rng div_rng = Rng(seed).split(0xd1f);
  m["diversity"] = metrics::diversity_score(gen.sets, cfg.eval.diversity_pairs, div_rng);
  m["reconstruction"] = metrics::eval_reconstruction(model, data);
  m["capacity_failures"] = static_cast<double>(gen.capacity_failures);
  std::vector<graph::GraphSample> graphs;
  for (const auto& s : gen.sets) graphs.push_back(graph::graph_from_points(s, nb));
  const auto v = graph::validity_and_uniqueness(graphs, cfg.synth.max_neighbors);
  m["graph_valid_pct"] = v.valid_pct;
  m["graph_unique_valid_pct"] = v.unique_valid_pct;
  return m;
}

int cmd_dataset_gen(const std::string& config_path, const std::string& out,
                    const std::optional<std::uint64_t>& seed_flag, std::optional<std::size_t> count,
                    bool extrapolation) {
  auto cfg = load_or_default(config_path);
  cfg.seed = resolve_seed(seed_flag, cfg.seed);
  if (count) cfg.dataset_size = *count;
  echo_config(cfg);
  const auto synth_cfg = extrapolation ? cfg.synth.extrapolation() : cfg.synth;
  const auto data = synth::gen_dataset(synth_cfg, cfg.dataset_size, cfg.seed);
  json header;
  header["seed"] = cfg.seed;
  header["count"] = cfg.dataset_size;
  header["extrapolation"] = extrapolation;
  header["synth"] = json::parse(synth::config_to_json(synth_cfg));
  header["config"] = config::to_text(cfg);
  write_sets(out, data.sets, header);
  std::cout << "wrote " << data.size() << " sets (mean size " << data.mean_size() << ") to " << out
            << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path, const std::string& out,
              const std::optional<std::uint64_t>& seed_flag, const std::string& creator,
              std::optional<std::size_t> epochs, bool quiet) {
  auto cfg = load_or_default(config_path);
  cfg.seed = resolve_seed(seed_flag, cfg.seed);
  if (!creator.empty()) config::set_value(cfg, "creator", creator);
  if (epochs) cfg.train.epochs = *epochs;
  const auto data = synth::read_dataset(data_path);
  if (data.empty()) throw IoError("dataset " + data_path + " is empty");
  if (cfg.model.max_size == 0) cfg.model.max_size = data.max_size();
  echo_config(cfg);

  const fs::path dir(out);
  fs::create_directories(dir);
  write_text(dir / "config.txt", config::to_text(cfg));
  write_text(dir / "seed.txt", std::to_string(cfg.seed) + "\n");

  const auto counts = trainer::size_counts(data.sets);
  vae::SetVae model = vae::SetVae::init(cfg.model, counts, cfg.seed);
  trainer::Trainer t(model, data.sets, cfg.train, cfg.seed);
  const double initial = metrics::eval_reconstruction(model, data.sets);
  while (t.run_epoch()) {
    const auto& e = t.log().epochs.back();
    if (!quiet && (e.epoch % 10 == 0 || e.epoch + 1 == cfg.train.epochs)) {
      std::cerr << "epoch " << e.epoch << " mean_w2 " << e.mean_w2 << " lr " << e.lr << "\n";
    }
  }
  t.log().write_csv((dir / "train_log.csv").string());
  metrics::MetricMap m;
  m["initial_reconstruction"] = initial;
  m["reconstruction"] = metrics::eval_reconstruction(model, data.sets);
  const auto ckpt = checkpoint::capture(model, t, cfg, counts, m);
  checkpoint::save((dir / "final.json").string(), ckpt);
  write_text(dir / "train_metrics.json", metrics::metrics_json(m) + "\n");

  json manifest;
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = checkpoint::config_hash(cfg);
  manifest["inputs"] = {{"data", manifest_entry(data_path)}};
  if (!config_path.empty()) manifest["inputs"]["config"] = manifest_entry(config_path);
  manifest["outputs"] = json::object();
  for (const char* name : {"config.txt", "seed.txt", "train_log.csv", "final.json", "train_metrics.json"}) {
    manifest["outputs"][name] = manifest_entry(dir / name);
  }
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "reconstruction w2: " << initial << " -> " << m["reconstruction"] << "\n";
  return 0;
}

std::string data_from_manifest(const fs::path& ckpt) {
  const fs::path manifest = ckpt.parent_path() / "manifest.json";
  if (!fs::exists(manifest)) {
    throw UsageError("--data is required (no manifest.json next to the checkpoint)");
  }
  try {
    return json::parse(read_text(manifest)).at("inputs").at("data").at("path").get<std::string>();
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + manifest.string() + ": " + e.what());
  }
}

int cmd_generate(const std::string& ckpt_path, const std::string& out, std::size_t count,
                 const std::optional<std::uint64_t>& seed_flag, bool extrapolate) {
  const auto ckpt = checkpoint::load(ckpt_path);
  const auto model = checkpoint::restore_model(ckpt);
  const std::uint64_t seed = resolve_seed(seed_flag, ckpt.config.seed);
  Rng rng = Rng(seed).split(0x9e7);
  const auto gen = vae::generate(model, count, rng, extrapolate);
  json header{{"checkpoint", ckpt_path}, {"seed", seed}, {"count", count},
              {"extrapolate", extrapolate}, {"capacity_failures", gen.capacity_failures}};
  write_sets(out, gen.sets, header);
  std::cout << "wrote " << gen.sets.size() << " sets to " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, std::string data_path, const std::string& out,
             const std::string& csv, const std::optional<std::uint64_t>& seed_flag, bool extrapolate) {
  const auto ckpt = checkpoint::load(ckpt_path);
  const auto model = checkpoint::restore_model(ckpt);
  if (data_path.empty()) data_path = data_from_manifest(ckpt_path);
  const auto data = read_sets(data_path);
  const std::uint64_t seed = resolve_seed(seed_flag, ckpt.config.seed);
  const auto m = evaluate(model, data, ckpt.config, seed, extrapolate || ckpt.config.eval.extrapolate);
  const std::string text = metrics::metrics_json(m) + "\n";
  if (!out.empty()) write_text(out, text);
  if (!csv.empty()) {
    const bool fresh = !fs::exists(csv);
    std::ofstream f(csv, std::ios::app);
    if (!f) throw IoError("cannot write " + csv);
    if (fresh) f << "checkpoint,seed," << metrics::metrics_csv_header(m) << "\n";
    f << ckpt_path << ',' << seed << ',' << metrics::metrics_csv_row(m) << "\n";
  }
  std::cout << text;
  return 0;
}

int cmd_verify(const std::string& suite, const std::string& out,
               const std::optional<std::uint64_t>& seed_flag) {
  const std::uint64_t seed = resolve_seed(seed_flag, 0);
  const auto report = verify::run_suite(suite, seed);
  const std::string text = report.to_json() + "\n";
  if (!out.empty()) write_text(out, text);
  std::cout << text;
  return report.passed() ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"setgen: permutation-equivariant set generation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out, data_path, creator, ckpt_path, csv, suite = "all";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> count, epochs;
  std::size_t gen_count = 1000;
  bool extrapolate = false, quiet = false;

  auto* dataset = app.add_subcommand("dataset", "Synthetic dataset commands");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "Generate a synthetic dataset as JSON Lines");
  gen->add_option("--config", config_path, "Flat key = value config file")->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output JSONL path")->required();
  gen->add_option("--seed", seed, "Seed (falls back to SETGEN_SEED, then the config)");
  gen->add_option("--count", count, "Number of sets (default: dataset_size)");
  gen->add_flag("--extrapolation", extrapolate, "Use the +10 points size law");

  auto* train = app.add_subcommand("train", "Train a set VAE");
  train->add_option("--config", config_path, "Flat key = value config file")->check(CLI::ExistingFile);
  train->add_option("--data", data_path, "Training JSONL")->required();
  train->add_option("--out", out, "Run directory")->required();
  train->add_option("--seed", seed, "Seed (falls back to SETGEN_SEED, then the config)");
  train->add_option("--creator", creator, "mlp | iid | firstn | topn");
  train->add_option("--epochs", epochs, "Override the epoch count");
  train->add_flag("--quiet", quiet, "No per-epoch progress");

  auto* generate = app.add_subcommand("generate", "Sample sets from a checkpoint");
  generate->add_option("--ckpt", ckpt_path, "Checkpoint JSON")->required();
  generate->add_option("--out", out, "Output JSONL path")->required();
  generate->add_option("--count", gen_count, "Number of sets");
  generate->add_option("--seed", seed, "Seed");
  generate->add_flag("--extrapolate", extrapolate, "Sample sizes shifted by +10");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--ckpt", ckpt_path, "Checkpoint JSON")->required();
  eval->add_option("--data", data_path, "Reference JSONL (default: from the run manifest)");
  eval->add_option("--out", out, "Metrics JSON path");
  eval->add_option("--csv", csv, "Append a CSV row to this file");
  eval->add_option("--seed", seed, "Seed");
  eval->add_flag("--extrapolate", extrapolate, "Sample sizes shifted by +10");

  auto* verify_cmd = app.add_subcommand("verify", "Run the equivariance property suites");
  verify_cmd->add_option("--suite", suite, "loss | training | prop2 | ordering | all")
      ->check(CLI::IsMember(verify::suite_names()));
  verify_cmd->add_option("--out", out, "Report JSON path");
  verify_cmd->add_option("--seed", seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*gen) return cmd_dataset_gen(config_path, out, seed, count, extrapolate);
    if (*train) return cmd_train(config_path, data_path, out, seed, creator, epochs, quiet);
    if (*generate) return cmd_generate(ckpt_path, out, gen_count, seed, extrapolate);
    if (*eval) return cmd_eval(ckpt_path, data_path, out, csv, seed, extrapolate);
    if (*verify_cmd) return cmd_verify(suite, out, seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << app.help();
  return 2;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace setgen::cli
