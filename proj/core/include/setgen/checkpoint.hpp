#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "setgen/config.hpp"
#include "setgen/metrics.hpp"
#include "setgen/tensor.hpp"
#include "setgen/trainer.hpp"
#include "setgen/vae.hpp"

namespace setgen::checkpoint {

struct ParamRecord {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  config::RunConfig config;  // model.max_size resolved
  std::map<std::size_t, double> size_counts;
  std::vector<ParamRecord> params;
  std::uint64_t adam_steps = 0;
  double lr = 0.0;
  std::vector<std::vector<double>> first_moments;
  std::vector<std::vector<double>> second_moments;
  double scheduler_best = 0.0;  // +inf before the first epoch
  std::size_t scheduler_bad_epochs = 0;
  std::size_t scheduler_cuts = 0;
  std::string rng_state;
  std::size_t epoch = 0;
  std::size_t step = 0;
  metrics::MetricMap metrics;
};

std::string config_hash(const config::RunConfig& cfg);

Checkpoint capture(const vae::SetVae& model, const trainer::Trainer& trainer,
                   const config::RunConfig& cfg, const std::map<std::size_t, double>& counts,
                   metrics::MetricMap metrics = {});

std::string to_json(const Checkpoint& ckpt);
// CheckpointError on malformed content or a config hash mismatch.
Checkpoint from_json(const std::string& text);

void save(const std::string& path, const Checkpoint& ckpt);
Checkpoint load(const std::string& path);

// Rebuilds the model and copies every parameter bit-exactly.
vae::SetVae restore_model(const Checkpoint& ckpt);
// Restores optimizer, scheduler, rng and counters into a trainer built on the restored model.
void restore_trainer(const Checkpoint& ckpt, trainer::Trainer& trainer);

}  // namespace setgen::checkpoint
