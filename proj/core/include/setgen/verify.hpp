#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "setgen/matrix.hpp"
#include "setgen/rng.hpp"
#include "setgen/tensor.hpp"
#include "setgen/trainer.hpp"
#include "setgen/vae.hpp"

// Executable permutation-equivariance checks.
namespace setgen::verify {

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);
// Rows in uniformly random order (Fisher-Yates).
PointSet randomize(const PointSet& x, Rng& rng);
// Rows sorted lexicographically.
PointSet canonical_order(const PointSet& y);

// Gather construction with the identity reference basis: output row i is
// ((e_i^T W1) * z) W2 with z the flattened canonical set. Returns
// w2_equal(output, y).
PointSet prop2_construct(const PointSet& y);
double prop2_construct_and_check(const PointSet& y);

struct CheckResult {
  std::string name;
  double value = 0.0;      // observed deviation
  double threshold = 0.0;  // pass iff value < threshold (or >= for negative controls)
  bool expect_violation = false;
  bool passed = false;
};

using PairLoss = std::function<double(const PointSet& x, const PointSet& x_hat)>;

// Max |l(pi X, X_hat) - l(X, X_hat)| over random X, X_hat, pi.
double max_permutation_deviation(const PairLoss& loss, std::size_t trials, Rng& rng,
                                 std::size_t max_n = 8);

// chamfer, w2_equal, vae_total_loss, invariant-discriminator GAN loss, and the
// first-row negative control.
std::vector<CheckResult> check_loss_perm_invariance(std::size_t trials, std::uint64_t seed);

struct EquivarianceReport {
  std::size_t steps = 0;
  std::vector<double> losses_a;
  std::vector<double> losses_b;
  double max_rel_diff = 0.0;
  double max_param_rel_diff = 0.0;
  bool passed = false;
};

using ModelFactory = std::function<vae::SetVae()>;

// Trains twice from the same seed: once on `sets`, once with every set's rows
// independently permuted. Passes iff every step's loss agrees to `tolerance`.
EquivarianceReport check_training_equivariance(const ModelFactory& factory,
                                               const std::vector<PointSet>& sets,
                                               trainer::TrainConfig cfg, std::size_t steps,
                                               std::uint64_t seed, double tolerance = 1e-6);

struct SuiteReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  std::string to_json() const;
};

// suite: "loss", "training", "prop2", "ordering" or "all".
SuiteReport run_suite(const std::string& suite, std::uint64_t seed);
std::vector<std::string> suite_names();

}  // namespace setgen::verify
