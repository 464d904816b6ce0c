#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "setgen/nn.hpp"

namespace setgen::nn {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list.
class Adam {
 public:
  Adam(ParamList params, AdamConfig config = {});

  // Applies one update in place. Every parameter must hold a gradient.
  void step();

  double lr() const { return config_.lr; }
  void set_lr(double lr) { config_.lr = lr; }
  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return steps_; }
  const ParamList& params() const { return params_; }

  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void restore(std::uint64_t steps, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v);

 private:
  ParamList params_;
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

struct PlateauConfig {
  std::size_t patience = 25;
  double factor = 0.5;
  double rel_threshold = 1e-3;
  double min_lr = 1e-6;
};

// Multiplies the learning rate by `factor` once the tracked metric has failed
// to beat best * (1 - rel_threshold) for `patience` consecutive epochs. The
// bad-epoch counter restarts after every cut; the rate never drops below
// min_lr.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(PlateauConfig config = {});

  double step(double metric, double lr);

  std::size_t bad_epochs() const { return bad_epochs_; }
  double best() const { return best_; }
  std::size_t cuts() const { return cuts_; }
  void restore(double best, std::size_t bad_epochs, std::size_t cuts);

 private:
  PlateauConfig config_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs_ = 0;
  std::size_t cuts_ = 0;
};

// Replays a whole metric history through a fresh scheduler.
double plateau_lr(std::span<const double> history, double lr, PlateauConfig config = {});

}  // namespace setgen::nn
