#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "setgen/losses.hpp"
#include "setgen/matrix.hpp"
#include "setgen/optim.hpp"
#include "setgen/rng.hpp"
#include "setgen/vae.hpp"

namespace setgen::trainer {

enum class ReconLoss { w2, chamfer, first_row };

std::string to_string(ReconLoss r);
ReconLoss parse_recon_loss(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  std::size_t max_steps = 0;  // 0 = no limit
  nn::AdamConfig adam;
  nn::PlateauConfig plateau;
  losses::LossWeights weights;
  double size_aux_weight = 1.0;
  ReconLoss recon = ReconLoss::w2;
  bool sample_latent = true;
};

using Batch = std::vector<std::size_t>;

// Groups set indices by size, shuffles each group, cuts it into batches of at
// most batch_size, then shuffles the batch order.
std::vector<Batch> make_batches(const std::vector<std::size_t>& sizes, std::size_t batch_size,
                                Rng& rng);
std::vector<Batch> make_batches(const std::vector<PointSet>& sets, std::size_t batch_size, Rng& rng);

// Mean squared error between the first rows; deliberately order dependent.
Tensor first_row_loss(const Tensor& x, const Tensor& x_hat);

struct StepRecord {
  std::size_t step = 0;
  double total = 0.0;
  double w2 = 0.0;  // reconstruction term, whichever loss is configured
  double kl = 0.0;
  double reg2 = 0.0;
  double reg3 = 0.0;
  double aux_n = 0.0;
  double lr = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_w2 = 0.0;
  double lr = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;

  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

// Absolute counts per set size.
std::map<std::size_t, double> size_counts(const std::vector<PointSet>& sets);

// Deterministic trainer: batching and latent noise come from one stream
// derived from the seed.
class Trainer {
 public:
  Trainer(vae::SetVae& model, const std::vector<PointSet>& sets, TrainConfig cfg, std::uint64_t seed);

  // Runs one epoch (or until max_steps). Returns false when nothing ran.
  bool run_epoch();
  // Runs all remaining epochs.
  const TrainLog& run();

  using StepHook = std::function<void(const StepRecord&)>;
  void on_step(StepHook hook) { hook_ = std::move(hook); }

  const TrainLog& log() const { return log_; }
  const nn::Adam& adam() const { return adam_; }
  nn::Adam& adam() { return adam_; }
  const nn::PlateauScheduler& scheduler() const { return scheduler_; }
  nn::PlateauScheduler& scheduler() { return scheduler_; }
  const Rng& rng() const { return rng_; }
  void set_rng(Rng rng) { rng_ = std::move(rng); }
  std::size_t epoch() const { return epoch_; }
  void set_epoch(std::size_t e) { epoch_ = e; }
  std::size_t step() const { return step_; }
  void set_step(std::size_t s) { step_ = s; }
  const TrainConfig& config() const { return cfg_; }

 private:
  StepRecord train_step(const Batch& batch);

  vae::SetVae& model_;
  const std::vector<PointSet>& sets_;
  TrainConfig cfg_;
  nn::Adam adam_;
  nn::PlateauScheduler scheduler_;
  Rng rng_;
  TrainLog log_;
  StepHook hook_;
  std::size_t epoch_ = 0;
  std::size_t step_ = 0;
};

inline constexpr std::uint64_t kTrainStreamKey = 0x7a1;

}  // namespace setgen::trainer
