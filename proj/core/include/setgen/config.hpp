#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "setgen/synthetic.hpp"
#include "setgen/trainer.hpp"
#include "setgen/vae.hpp"

namespace setgen::config {

struct EvalConfig {
  std::size_t generate_count = 1000;
  std::size_t diversity_pairs = 1000;
  bool extrapolate = false;
};

// Everything a run needs. model.max_size == 0 means "largest training set".
struct RunConfig {
  std::uint64_t seed = 0;
  synth::SynthConfig synth;
  std::size_t dataset_size = 2000;
  vae::ModelConfig model = default_model();
  trainer::TrainConfig train;
  EvalConfig eval;

  static vae::ModelConfig default_model() {
    vae::ModelConfig m;
    m.max_size = 0;
    return m;
  }
  // Copies the synthetic constraints into the loss weights.
  void sync();
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys and malformed
// values raise ConfigError with the 1-based line number.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

void set_value(RunConfig& cfg, const std::string& key, const std::string& value, std::size_t line = 0);
std::vector<std::string> known_keys();

// Every key with its resolved value, one per line, in a fixed order.
std::string to_text(const RunConfig& cfg);

}  // namespace setgen::config
