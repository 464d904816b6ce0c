#include "setgen/losses.hpp"

#include "setgen/errors.hpp"
#include "setgen/ops.hpp"

namespace setgen::losses {

namespace {

void require_point_sets(const Tensor& x, const Tensor& y, const char* name) {
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.cols()) {
    throw ShapeError(std::string(name) + ": incompatible point sets " + shape_string(x.shape()) +
                     " and " + shape_string(y.shape()));
  }
  if (x.rows() == 0 || y.rows() == 0) throw ContractError(std::string(name) + ": empty set");
}

Tensor off_diagonal_mask(std::size_t n, bool upper_only) {
  std::vector<double> mask(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = upper_only ? i + 1 : 0; j < n; ++j)
      if (i != j) mask[i * n + j] = 1.0;
  return Tensor::from_values({n, n}, std::move(mask));
}

}  // namespace

Tensor chamfer(const Tensor& x, const Tensor& y) {
  require_point_sets(x, y, "chamfer");
  const Tensor d = ops::pairwise_sqdist(x, y);
  return ops::scale(ops::add(ops::sum(ops::min_cols(d)), ops::sum(ops::min_rows(d))), 0.5);
}

Tensor w2_equal(const Tensor& x, const Tensor& y) {
  require_point_sets(x, y, "w2_equal");
  if (x.rows() != y.rows()) {
    throw ShapeError("w2_equal needs equal sizes, got " + std::to_string(x.rows()) + " and " +
                     std::to_string(y.rows()));
  }
  const auto assignment =
      matching::hungarian(matching::squared_distances(x.to_matrix(), y.to_matrix()));
  const Tensor matched = ops::gather_rows(y, assignment.column_of_row);
  return ops::scale(ops::sum(ops::square(ops::sub(x, matched))),
                    1.0 / static_cast<double>(x.rows()));
}

Tensor w2_uniform(const Tensor& x, const Tensor& y) {
  require_point_sets(x, y, "w2_uniform");
  const auto plan = matching::ot_uniform(x.to_matrix(), y.to_matrix());
  return ops::sum(ops::mul(ops::pairwise_sqdist(x, y), Tensor::from_matrix(plan.coupling)));
}

Tensor kl_diag_gauss(const Tensor& mu, const Tensor& logvar) {
  if (mu.shape() != logvar.shape()) throw ShapeError("kl_diag_gauss: mu/logvar shape mismatch");
  const Tensor terms =
      ops::sub(ops::add(ops::square(mu), ops::exp(logvar)), ops::add_scalar(logvar, 1.0));
  return ops::scale(ops::sum(terms), 0.5);
}

Tensor reg_min_dist(const Tensor& x, double d0) {
  if (!(d0 > 0.0)) throw ContractError("reg_min_dist: d0 must be positive");
  const std::size_t n = x.rows();
  const Tensor hinge = ops::relu(ops::add_scalar(ops::neg(ops::pairwise_dist(x)), d0));
  return ops::sum(ops::mul(hinge, off_diagonal_mask(n, true)));
}

Tensor reg_valency(const Tensor& x, double neighbor_distance, double max_neighbors, double tau) {
  if (!(neighbor_distance > 0.0) || !(tau > 0.0)) {
    throw ContractError("reg_valency: neighbor distance and temperature must be positive");
  }
  const std::size_t n = x.rows();
  const Tensor logits = ops::scale(ops::add_scalar(ops::neg(ops::pairwise_dist(x)), neighbor_distance),
                                   1.0 / tau);
  const Tensor counts = ops::sum_cols(ops::mul(ops::sigmoid(logits), off_diagonal_mask(n, false)));
  const Tensor lonely = ops::relu(ops::add_scalar(ops::neg(counts), 1.0));
  const Tensor crowded = ops::relu(ops::add_scalar(counts, -max_neighbors));
  return ops::sum(ops::add(lonely, crowded));
}

LossBreakdown vae_total_loss(const Tensor& x, const Tensor& x_hat, const Tensor& mu,
                             const Tensor& logvar, const LossWeights& weights) {
  if (x.rank() != 2 || x_hat.rank() != 2 || x.rows() != x_hat.rows()) {
    throw ContractError("vae loss needs equal-size input and reconstruction, got " +
                        shape_string(x.shape()) + " and " + shape_string(x_hat.shape()));
  }
  LossBreakdown out;
  out.w2 = w2_equal(x, x_hat);
  out.kl = ops::scale(kl_diag_gauss(mu, logvar), weights.kl);
  out.min_dist = ops::scale(reg_min_dist(x_hat, weights.d0), weights.min_dist);
  out.valency = ops::scale(
      reg_valency(x_hat, weights.neighbor_distance, weights.max_neighbors, weights.temperature()),
      weights.valency);
  out.total = ops::add(ops::add(out.w2, out.kl), ops::add(out.min_dist, out.valency));
  return out;
}

double chamfer_value(const Matrix& x, const Matrix& y) {
  return chamfer(Tensor::from_matrix(x), Tensor::from_matrix(y)).item();
}

double w2_equal_value(const Matrix& x, const Matrix& y) {
  return w2_equal(Tensor::from_matrix(x), Tensor::from_matrix(y)).item();
}

}  // namespace setgen::losses
