#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "setgen/matrix.hpp"
#include "setgen/rng.hpp"

// Molecule-like 3D point sets built by rejection sampling, and the distance
// graphs derived from them.
namespace setgen::synth {

inline constexpr std::size_t kPointDim = 3;

struct SynthConfig {
  double box_min = 0.0;  // same range on every axis
  double box_max = 4.0;
  double min_distance = 0.9;
  double neighbor_distance = 1.1;
  std::size_t max_neighbors = 4;
  double size_mean = 9.0;  // Poisson mean, rejected outside [size_min, size_max]
  std::size_t size_min = 2;
  std::size_t size_max = 35;
  std::size_t attempts = 20000;  // proposals per set before restarting it
  std::size_t max_restarts = 100;

  void validate() const;
  // Size law shifted by +10 points on average, support widened to 45.
  SynthConfig extrapolation() const;
};

struct SetDataset {
  std::vector<PointSet> sets;

  std::size_t size() const { return sets.size(); }
  bool empty() const { return sets.empty(); }
  // Empirical p(n); sums to 1.
  std::map<std::size_t, double> size_histogram() const;
  double mean_size() const;
  std::size_t max_size() const;
};

// Symmetric boolean adjacency with zero diagonal.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(std::size_t n) : n_(n), bits_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
  void connect(std::size_t i, std::size_t j, bool on = true) {
    bits_[i * n_ + j] = on;
    bits_[j * n_ + i] = on;
  }
  std::vector<std::size_t> degrees() const;
  std::size_t edge_count() const;
  bool connected() const;
  Adjacency permuted(const std::vector<std::size_t>& order) const;

  friend bool operator==(const Adjacency&, const Adjacency&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Draws a target size from the configured size law.
std::size_t sample_size(const SynthConfig& cfg, Rng& rng);

// One set of exactly `size` points satisfying every constraint.
PointSet sample_set_of_size(const SynthConfig& cfg, std::size_t size, Rng& rng);
PointSet sample_set(const SynthConfig& cfg, Rng& rng);

// Set k is drawn from Rng(seed).split(k), so the dataset depends only on
// (cfg, count, seed).
SetDataset gen_dataset(const SynthConfig& cfg, std::size_t count, std::uint64_t seed);

// A[i][j] = 1 iff i != j and |x_i - x_j| <= neighbor_distance.
Adjacency derive_graph(const PointSet& x, double neighbor_distance);
std::vector<std::size_t> valency_of(const PointSet& x, double neighbor_distance);

// Human-readable constraint violations (empty when the set is valid).
std::vector<std::string> constraint_violations(const PointSet& x, const SynthConfig& cfg);

// JSON Lines: one {"points": [[x, y, z], ...]} object per line. An optional
// JSON header is written next to the file as <path>.header.json.
void write_dataset(const std::string& path, const SetDataset& data,
                   const std::optional<std::string>& header_json = std::nullopt);
// When `validate` is given every set is checked against it.
SetDataset read_dataset(const std::string& path, const SynthConfig* validate = nullptr);

std::string config_to_json(const SynthConfig& cfg);

}  // namespace setgen::synth
