#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "setgen/errors.hpp"
#include "setgen/gradcheck.hpp"
#include "setgen/losses.hpp"
#include "setgen/matching.hpp"
#include "setgen/ops.hpp"

using namespace setgen;
using namespace setgen::losses;
using testing::permutation;
using testing::random_matrix;
using testing::random_tensor;

namespace {

Tensor permuted(const Tensor& x, const std::vector<std::size_t>& p) { return ops::gather_rows(x, p); }

double coupling_cost(const Matrix& coupling, const Matrix& cost) {
  double s = 0.0;
  for (std::size_t i = 0; i < cost.rows(); ++i)
    for (std::size_t j = 0; j < cost.cols(); ++j) s += coupling(i, j) * cost(i, j);
  return s;
}

}  // namespace

TEST_CASE("chamfer examples") {
  const Tensor x = Tensor::from_values({1, 2}, {0, 0});
  const Tensor y = Tensor::from_values({1, 2}, {3, 4});
  CHECK(chamfer(x, y).item() == doctest::Approx(25.0));
  Rng rng(1);
  const Tensor a = random_tensor({5, 3}, rng);
  CHECK(chamfer(a, a).item() == 0.0);
  CHECK_THROWS_AS(chamfer(a, random_tensor({5, 2}, rng)), ShapeError);
}

TEST_CASE("chamfer vanishes iff supports coincide") {
  const Tensor x = Tensor::from_values({3, 1}, {0, 1, 1});
  const Tensor y = Tensor::from_values({2, 1}, {1, 0});
  CHECK(chamfer(x, y).item() == 0.0);
  CHECK(w2_uniform(x, y).item() > 0.0);  // different multisets
  const Tensor z = Tensor::from_values({2, 1}, {1, 0.5});
  CHECK(chamfer(x, z).item() > 0.0);
}

TEST_CASE("hungarian examples") {
  const auto a = matching::hungarian(Matrix::from_rows({{1, 2}, {3, 1}}));
  CHECK(a.column_of_row == std::vector<std::size_t>{0, 1});
  CHECK(a.cost == 2.0);
  Matrix diag(4, 4, 1.0);
  for (std::size_t i = 0; i < 4; ++i) diag(i, i) = 0.0;
  const auto b = matching::hungarian(diag);
  CHECK(b.column_of_row == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(b.cost == 0.0);
  CHECK_THROWS_AS(matching::hungarian(Matrix(2, 3)), ShapeError);
}

TEST_CASE("hungarian equals brute force, including ties") {
  Rng rng(2);
  for (std::size_t n = 1; n <= 7; ++n) {
    for (int trial = 0; trial < 200; ++trial) {
      Matrix cost = random_matrix(n, n, rng, 0.0, 10.0);
      if (trial % 3 == 0)
        for (double& v : cost.values()) v = std::floor(v / 4.0);  // many ties
      const auto h = matching::hungarian(cost);
      const auto b = matching::brute_force_assignment(cost);
      CHECK(std::abs(h.cost - b.cost) <= 1e-9);
      CHECK(h.column_of_row == b.column_of_row);  // lexicographically smallest optimum
    }
  }
}

TEST_CASE("uniform transport") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(6), m = 1 + rng.uniform_index(6);
    const Matrix x = random_matrix(n, 3, rng), y = random_matrix(m, 3, rng);
    const auto plan = matching::ot_uniform(x, y);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(plan.coupling(i, j) >= 0.0);
        s += plan.coupling(i, j);
      }
      CHECK(std::abs(s - 1.0 / n) < 1e-9);
    }
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += plan.coupling(i, j);
      CHECK(std::abs(s - 1.0 / m) < 1e-9);
    }
    CHECK(std::abs(plan.cost - coupling_cost(plan.coupling, matching::squared_distances(x, y))) < 1e-9);
    if (n == m) CHECK(std::abs(plan.cost - w2_equal_value(x, y)) < 1e-9);
  }
  // Forced coupling from a single point.
  const Matrix p = Matrix::from_rows({{0, 0}});
  const Matrix q = Matrix::from_rows({{1, 0}, {0, 2}});
  CHECK(matching::ot_uniform(p, q).cost == doctest::Approx((1.0 + 4.0) / 2.0));
  const Matrix r = random_matrix(4, 3, rng);
  CHECK(std::abs(matching::ot_uniform(r, r.permute_rows(std::vector<std::size_t>{2, 0, 3, 1})).cost) < 1e-12);
}

TEST_CASE("uniform transport beats every integral coupling on a small grid") {
  // n=2, m=3: compare with a brute-force LP over the vertices of the transport polytope,
  // approximated by scanning a fine grid of the two free variables.
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_matrix(2, 2, rng), y = random_matrix(3, 2, rng);
    const Matrix c = matching::squared_distances(x, y);
    double best = 1e300;
    const int steps = 60;
    for (int a = 0; a <= steps; ++a) {
      for (int b = 0; a + b <= steps; ++b) {
        const double u00 = (1.0 / 3.0) * a / steps, u01 = (1.0 / 3.0) * b / steps;
        const double u02 = 0.5 - u00 - u01;
        if (u02 < -1e-12 || u02 > 1.0 / 3.0 + 1e-12) continue;
        const double u10 = 1.0 / 3.0 - u00, u11 = 1.0 / 3.0 - u01, u12 = 1.0 / 3.0 - u02;
        best = std::min(best, u00 * c(0, 0) + u01 * c(0, 1) + u02 * c(0, 2) + u10 * c(1, 0) +
                                  u11 * c(1, 1) + u12 * c(1, 2));
      }
    }
    CHECK(matching::ot_uniform(x, y).cost <= best + 1e-9);
  }
}

TEST_CASE("w2_equal examples and metric properties") {
  const Tensor x = Tensor::from_values({1, 1}, {0});
  const Tensor y = Tensor::from_values({1, 1}, {2});
  CHECK(w2_equal(x, y).item() == doctest::Approx(4.0));
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(6);
    const Matrix a = random_matrix(n, 3, rng), b = random_matrix(n, 3, rng), c = random_matrix(n, 3, rng);
    const double ab = std::sqrt(w2_equal_value(a, b)), bc = std::sqrt(w2_equal_value(b, c));
    const double ac = std::sqrt(w2_equal_value(a, c));
    CHECK(ac <= ab + bc + 1e-9);
    CHECK(w2_equal_value(a, a.permute_rows(permutation(n, rng))) == doctest::Approx(0.0));
  }
  CHECK_THROWS_AS(w2_equal(random_tensor({2, 3}, rng), random_tensor({3, 3}, rng)), ShapeError);
}

TEST_CASE("losses are invariant to row permutations") {
  Rng rng(6);
  LossWeights w;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(7);
    const Tensor x = random_tensor({n, 3}, rng, -2, 2), y = random_tensor({n, 3}, rng, -2, 2);
    const auto p = permutation(n, rng), q = permutation(n, rng);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); };
    CHECK(rel(chamfer(permuted(x, p), permuted(y, q)).item(), chamfer(x, y).item()) < 1e-12);
    CHECK(rel(w2_equal(permuted(x, p), permuted(y, q)).item(), w2_equal(x, y).item()) < 1e-12);
    CHECK(rel(reg_min_dist(permuted(y, q)).item(), reg_min_dist(y).item()) < 1e-12);
    CHECK(rel(reg_valency(permuted(y, q), 1.1, 4, 0.11).item(), reg_valency(y, 1.1, 4, 0.11).item()) < 1e-12);
    const Tensor mu = random_tensor({1, 4}, rng), lv = random_tensor({1, 4}, rng);
    CHECK(rel(vae_total_loss(permuted(x, p), y, mu, lv, w).total.item(),
              vae_total_loss(x, y, mu, lv, w).total.item()) < 1e-12);
  }
}

TEST_CASE("kl divergence") {
  CHECK(kl_diag_gauss(Tensor::row({0, 0}), Tensor::row({0, 0})).item() == 0.0);
  CHECK(kl_diag_gauss(Tensor::row({1}), Tensor::row({0})).item() == doctest::Approx(0.5));
  Rng rng(7);
  for (int i = 0; i < 100; ++i)
    CHECK(kl_diag_gauss(random_tensor({1, 5}, rng, -3, 3), random_tensor({1, 5}, rng, -3, 3)).item() >= 0.0);
}

TEST_CASE("regularizers") {
  CHECK(reg_min_dist(Tensor::from_values({2, 3}, {0, 0, 0, 2, 0, 0})).item() == 0.0);
  CHECK(reg_min_dist(Tensor::from_values({2, 3}, {0, 0, 0, 0.5, 0, 0}), 1.0).item() == doctest::Approx(0.5));

  const double nb = 1.1, tau = 0.11;
  CHECK(reg_valency(Tensor::from_values({2, 3}, {0, 0, 0, nb, 0, 0}), nb, 4, tau).item() ==
        doctest::Approx(1.0));
  const Tensor far = Tensor::from_values({3, 3}, {0, 0, 0, 50, 0, 0, 0, 50, 0});
  CHECK(reg_valency(far, nb, 4, tau).item() == doctest::Approx(3.0));
  Rng rng(8);
  const Tensor clique = random_tensor({6, 3}, rng, 0.0, 0.01);
  CHECK(reg_valency(clique, nb, 4, tau).item() == doctest::Approx(6.0).epsilon(1e-3));  // each k_i near 5
}

TEST_CASE("vae total loss bookkeeping") {
  Rng rng(9);
  const Tensor x = random_tensor({4, 3}, rng);
  const Tensor mu = random_tensor({1, 3}, rng), lv = random_tensor({1, 3}, rng);
  LossWeights zero;
  zero.kl = zero.min_dist = zero.valency = 0.0;
  CHECK(vae_total_loss(x, ops::gather_rows(x, std::vector<std::size_t>{3, 1, 0, 2}), mu, lv, zero)
            .total.item() == doctest::Approx(0.0));
  const Tensor y = random_tensor({4, 3}, rng);
  CHECK(vae_total_loss(x, y, mu, lv, zero).total.item() == doctest::Approx(w2_equal(x, y).item()));
  const auto b = vae_total_loss(x, y, mu, lv, LossWeights{});
  CHECK(std::abs(b.total.item() - (b.w2.item() + b.kl.item() + b.min_dist.item() + b.valency.item())) < 1e-12);
  CHECK_THROWS_AS(vae_total_loss(x, random_tensor({3, 3}, rng), mu, lv, zero), ContractError);
}

TEST_CASE("losses pass gradcheck away from ties") {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor target = random_tensor({4, 3}, rng, -2, 2);
    CHECK(gradcheck([&](const Tensor& t) { return chamfer(target, t); }, random_tensor({3, 3}, rng, -2, 2)).passed);
    CHECK(gradcheck([&](const Tensor& t) { return w2_equal(target, t); }, random_tensor({4, 3}, rng, -2, 2)).passed);
    CHECK(gradcheck([&](const Tensor& t) { return w2_uniform(target, t); }, random_tensor({3, 3}, rng, -2, 2)).passed);
    CHECK(gradcheck([](const Tensor& t) { return reg_min_dist(t, 1.0); }, random_tensor({4, 3}, rng, 0, 1.2)).passed);
    CHECK(gradcheck([](const Tensor& t) { return reg_valency(t, 1.1, 2, 0.11); }, random_tensor({4, 3}, rng, 0, 1.5)).passed);
    const Tensor lv = random_tensor({1, 3}, rng);
    CHECK(gradcheck([&](const Tensor& t) { return kl_diag_gauss(t, lv); }, random_tensor({1, 3}, rng)).passed);
    CHECK(gradcheck([&](const Tensor& t) { return kl_diag_gauss(lv, t); }, random_tensor({1, 3}, rng)).passed);
  }
}
