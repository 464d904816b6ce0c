#include "setgen/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "setgen/errors.hpp"
#include "setgen/hash.hpp"

namespace setgen::checkpoint {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "setgen-checkpoint-1";

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string config_hash(const config::RunConfig& cfg) { return sha1_hex(config::to_text(cfg)); }

Checkpoint capture(const vae::SetVae& model, const trainer::Trainer& trainer,
                   const config::RunConfig& cfg, const std::map<std::size_t, double>& counts,
                   metrics::MetricMap metrics) {
  Checkpoint c;
  c.config = cfg;
  c.config.model = model.config();
  c.size_counts = counts;
  for (const auto& p : model.params()) {
    const auto d = p.tensor.data();
    c.params.push_back({p.name, p.tensor.shape(), std::vector<double>(d.begin(), d.end())});
  }
  const auto& adam = trainer.adam();
  c.adam_steps = adam.steps();
  c.lr = adam.lr();
  c.first_moments = adam.first_moments();
  c.second_moments = adam.second_moments();
  c.scheduler_best = trainer.scheduler().best();
  c.scheduler_bad_epochs = trainer.scheduler().bad_epochs();
  c.scheduler_cuts = trainer.scheduler().cuts();
  c.rng_state = trainer.rng().serialize();
  c.epoch = trainer.epoch();
  c.step = trainer.step();
  c.metrics = std::move(metrics);
  return c;
}

std::string to_json(const Checkpoint& c) {
  json j;
  j["format"] = kFormat;
  j["config"] = config::to_text(c.config);
  j["config_hash"] = config_hash(c.config);
  json counts = json::array();
  for (const auto& [n, k] : c.size_counts) counts.push_back({n, k});
  j["size_counts"] = counts;
  json params = json::array();
  for (const auto& p : c.params) {
    params.push_back({{"name", p.name}, {"shape", p.shape}, {"values", p.values}});
  }
  j["params"] = params;
  j["adam"] = {{"steps", c.adam_steps},
               {"lr", c.lr},
               {"m", c.first_moments},
               {"v", c.second_moments}};
  j["scheduler"] = {{"best", finite_or_null(c.scheduler_best)},
                    {"bad_epochs", c.scheduler_bad_epochs},
                    {"cuts", c.scheduler_cuts}};
  j["rng"] = c.rng_state;
  j["epoch"] = c.epoch;
  j["step"] = c.step;
  json m = json::object();
  for (const auto& [k, v] : c.metrics) m[k] = finite_or_null(v);
  j["metrics"] = m;
  return j.dump() + "\n";
}

Checkpoint from_json(const std::string& text) {
  Checkpoint c;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kFormat) throw CheckpointError("unknown checkpoint format");
    const std::string cfg_text = j.at("config").get<std::string>();
    if (sha1_hex(cfg_text) != j.at("config_hash").get<std::string>()) {
      throw CheckpointError("config hash mismatch: checkpoint is corrupted or edited");
    }
    c.config = config::parse_config(cfg_text);
    if (config_hash(c.config) != j.at("config_hash").get<std::string>()) {
      throw CheckpointError("config does not round-trip to its recorded hash");
    }
    for (const auto& e : j.at("size_counts")) {
      c.size_counts[e.at(0).get<std::size_t>()] = e.at(1).get<double>();
    }
    for (const auto& p : j.at("params")) {
      c.params.push_back({p.at("name").get<std::string>(), p.at("shape").get<Shape>(),
                          p.at("values").get<std::vector<double>>()});
    }
    const auto& a = j.at("adam");
    c.adam_steps = a.at("steps").get<std::uint64_t>();
    c.lr = a.at("lr").get<double>();
    c.first_moments = a.at("m").get<std::vector<std::vector<double>>>();
    c.second_moments = a.at("v").get<std::vector<std::vector<double>>>();
    const auto& s = j.at("scheduler");
    c.scheduler_best = s.at("best").is_null() ? std::numeric_limits<double>::infinity()
                                               : s.at("best").get<double>();
    c.scheduler_bad_epochs = s.at("bad_epochs").get<std::size_t>();
    c.scheduler_cuts = s.at("cuts").get<std::size_t>();
    c.rng_state = j.at("rng").get<std::string>();
    c.epoch = j.at("epoch").get<std::size_t>();
    c.step = j.at("step").get<std::size_t>();
    for (const auto& [k, v] : j.at("metrics").items()) {
      c.metrics[k] = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  return c;
}

void save(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << to_json(ckpt);
  if (!f) throw IoError("write failed for " + path);
}

Checkpoint load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return from_json(buf.str());
}

vae::SetVae restore_model(const Checkpoint& ckpt) {
  vae::SetVae model = vae::SetVae::init(ckpt.config.model, ckpt.size_counts, ckpt.config.seed);
  auto params = model.params();
  if (params.size() != ckpt.params.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(ckpt.params.size()) +
                          " parameters, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& rec = ckpt.params[i];
    if (rec.name != params[i].name || rec.shape != params[i].tensor.shape() ||
        rec.values.size() != params[i].tensor.numel()) {
      throw CheckpointError("parameter mismatch at '" + rec.name + "'");
    }
    auto dst = params[i].tensor.mutable_data();
    std::copy(rec.values.begin(), rec.values.end(), dst.begin());
  }
  return model;
}

void restore_trainer(const Checkpoint& ckpt, trainer::Trainer& trainer) {
  trainer.adam().restore(ckpt.adam_steps, ckpt.first_moments, ckpt.second_moments);
  trainer.adam().set_lr(ckpt.lr);
  trainer.scheduler().restore(ckpt.scheduler_best, ckpt.scheduler_bad_epochs, ckpt.scheduler_cuts);
  trainer.set_rng(Rng::deserialize(ckpt.rng_state));
  trainer.set_epoch(ckpt.epoch);
  trainer.set_step(ckpt.step);
}

}  // namespace setgen::checkpoint
