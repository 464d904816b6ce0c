#pragma once

#include <cstddef>

#include "setgen/matching.hpp"
#include "setgen/tensor.hpp"

// Permutation-invariant set losses and the regularizers of the set VAE.
// Matchers (assignment, transport plan) are computed on values and then held
// constant during the backward pass.
namespace setgen::losses {

// (sum_i min_j |x_i - y_j|^2 + sum_j min_i |x_i - y_j|^2) / 2.
Tensor chamfer(const Tensor& x, const Tensor& y);

// Squared-cost Wasserstein-2 between equal-size sets: optimal assignment
// cost divided by n.
Tensor w2_equal(const Tensor& x, const Tensor& y);

// Squared-cost Wasserstein-2 between sets of any sizes with uniform weights.
Tensor w2_uniform(const Tensor& x, const Tensor& y);

// 1/2 sum(mu^2 + exp(logvar) - logvar - 1).
Tensor kl_diag_gauss(const Tensor& mu, const Tensor& logvar);

// sum_{i<j} max(0, d0 - |x_i - x_j|).
Tensor reg_min_dist(const Tensor& x, double d0 = 1.0);

// Soft neighbour count k_i = sum_{j != i} sigmoid((d_nb - |x_i - x_j|) / tau);
// returns sum_i [max(0, 1 - k_i) + max(0, k_i - k_max)].
Tensor reg_valency(const Tensor& x, double neighbor_distance, double max_neighbors, double tau);

struct LossWeights {
  double kl = 1e-3;
  double min_dist = 0.1;
  double valency = 0.1;
  double d0 = 1.0;
  double neighbor_distance = 1.1;
  double max_neighbors = 4.0;
  // Sigmoid temperature; non-positive means 0.1 * neighbor_distance.
  double tau = 0.0;

  double temperature() const { return tau > 0.0 ? tau : 0.1 * neighbor_distance; }
};

// Weighted terms; total is their sum.
struct LossBreakdown {
  Tensor total;
  Tensor w2;
  Tensor kl;
  Tensor min_dist;
  Tensor valency;
};

LossBreakdown vae_total_loss(const Tensor& x, const Tensor& x_hat, const Tensor& mu,
                             const Tensor& logvar, const LossWeights& weights);

// Value-only helpers on plain point sets.
double chamfer_value(const Matrix& x, const Matrix& y);
double w2_equal_value(const Matrix& x, const Matrix& y);

}  // namespace setgen::losses
