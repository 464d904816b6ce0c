#include "setgen/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "setgen/errors.hpp"

namespace setgen::config {

namespace {

struct Entry {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

struct BadValue {
  std::string why;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw BadValue{"expected a non-negative integer"};
  return out;
}

double to_double(const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw BadValue{"expected a number"};
    return d;
  } catch (const std::logic_error&) {
    throw BadValue{"expected a number"};
  }
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw BadValue{"expected true or false"};
}

std::string num(double v) { return nlohmann::json(v).dump(); }

#define SIZE_ENTRY(name, field)                                                                \
  Entry {                                                                                      \
    name, [](RunConfig& c, const std::string& v) { c.field = static_cast<std::size_t>(to_u64(v)); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }                             \
  }
#define REAL_ENTRY(name, field)                                                     \
  Entry {                                                                           \
    name, [](RunConfig& c, const std::string& v) { c.field = to_double(v); },       \
        [](const RunConfig& c) { return num(c.field); }                             \
  }
#define BOOL_ENTRY(name, field)                                                     \
  Entry {                                                                           \
    name, [](RunConfig& c, const std::string& v) { c.field = to_bool(v); },         \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); } \
  }

template <typename F>
auto wrap_contract(F f) {
  return [f](RunConfig& c, const std::string& v) {
    try {
      f(c, v);
    } catch (const ContractError& e) {
      throw BadValue{e.what()};
    }
  };
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      Entry{"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
      REAL_ENTRY("box_min", synth.box_min),
      REAL_ENTRY("box_max", synth.box_max),
      REAL_ENTRY("min_distance", synth.min_distance),
      REAL_ENTRY("neighbor_distance", synth.neighbor_distance),
      SIZE_ENTRY("max_neighbors", synth.max_neighbors),
      REAL_ENTRY("size_mean", synth.size_mean),
      SIZE_ENTRY("size_min", synth.size_min),
      SIZE_ENTRY("size_max", synth.size_max),
      SIZE_ENTRY("attempts", synth.attempts),
      SIZE_ENTRY("max_restarts", synth.max_restarts),
      SIZE_ENTRY("dataset_size", dataset_size),
      SIZE_ENTRY("latent_dim", model.latent_dim),
      SIZE_ENTRY("hidden", model.hidden),
      SIZE_ENTRY("heads", model.heads),
      SIZE_ENTRY("blocks", model.blocks),
      SIZE_ENTRY("angle_dim", model.angle_dim),
      SIZE_ENTRY("low_dim", model.low_dim),
      Entry{"creator",
            wrap_contract([](RunConfig& c, const std::string& v) { c.model.creator = vae::parse_creator(v); }),
            [](const RunConfig& c) { return vae::to_string(c.model.creator); }},
      SIZE_ENTRY("max_size", model.max_size),
      SIZE_ENTRY("reference_size", model.reference_size),
      Entry{"size_mode",
            wrap_contract([](RunConfig& c, const std::string& v) { c.model.size_mode = vae::parse_size_mode(v); }),
            [](const RunConfig& c) { return vae::to_string(c.model.size_mode); }},
      SIZE_ENTRY("size_cap", model.size_cap),
      Entry{"pooling",
            wrap_contract([](RunConfig& c, const std::string& v) { c.model.pooling = vae::parse_pooling(v); }),
            [](const RunConfig& c) { return vae::to_string(c.model.pooling); }},
      REAL_ENTRY("logvar_min", model.logvar_min),
      REAL_ENTRY("logvar_max", model.logvar_max),
      SIZE_ENTRY("epochs", train.epochs),
      SIZE_ENTRY("batch_size", train.batch_size),
      SIZE_ENTRY("max_steps", train.max_steps),
      REAL_ENTRY("lr", train.adam.lr),
      REAL_ENTRY("beta1", train.adam.beta1),
      REAL_ENTRY("beta2", train.adam.beta2),
      REAL_ENTRY("adam_eps", train.adam.eps),
      SIZE_ENTRY("patience", train.plateau.patience),
      REAL_ENTRY("lr_factor", train.plateau.factor),
      REAL_ENTRY("plateau_threshold", train.plateau.rel_threshold),
      REAL_ENTRY("min_lr", train.plateau.min_lr),
      REAL_ENTRY("lambda_kl", train.weights.kl),
      REAL_ENTRY("lambda_min_dist", train.weights.min_dist),
      REAL_ENTRY("lambda_valency", train.weights.valency),
      REAL_ENTRY("d0", train.weights.d0),
      REAL_ENTRY("tau", train.weights.tau),
      REAL_ENTRY("size_aux_weight", train.size_aux_weight),
      Entry{"recon_loss",
            wrap_contract([](RunConfig& c, const std::string& v) { c.train.recon = trainer::parse_recon_loss(v); }),
            [](const RunConfig& c) { return trainer::to_string(c.train.recon); }},
      BOOL_ENTRY("sample_latent", train.sample_latent),
      SIZE_ENTRY("generate_count", eval.generate_count),
      SIZE_ENTRY("diversity_pairs", eval.diversity_pairs),
      BOOL_ENTRY("extrapolate", eval.extrapolate),
  };
  return table;
}

}  // namespace

void RunConfig::sync() {
  train.weights.neighbor_distance = synth.neighbor_distance;
  train.weights.max_neighbors = static_cast<double>(synth.max_neighbors);
  model.point_dim = synth::kPointDim;
}

void set_value(RunConfig& cfg, const std::string& key, const std::string& value, std::size_t line) {
  for (const auto& e : entries()) {
    if (key == e.key) {
      try {
        e.set(cfg, value);
      } catch (const BadValue& b) {
        throw ConfigError("bad value '" + value + "' (" + b.why + ") for key", key, line);
      }
      cfg.sync();
      return;
    }
  }
  throw ConfigError("unknown key", key, line);
}

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& e : entries()) keys.emplace_back(e.key);
  return keys;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  cfg.sync();
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value, got", body, line);
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", body, line);
    set_value(cfg, key, value, line);
  }
  try {
    cfg.synth.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("invalid synthetic settings: ") + e.what() + " in", "synth", 0);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read config " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& e : entries()) out += std::string(e.key) + " = " + e.get(cfg) + "\n";
  return out;
}

}  // namespace setgen::config
