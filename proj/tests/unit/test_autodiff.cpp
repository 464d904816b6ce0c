#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>

#include "helpers.hpp"
#include "setgen/errors.hpp"
#include "setgen/gradcheck.hpp"
#include "setgen/ops.hpp"
#include "setgen/rng.hpp"

using namespace setgen;
using testing::away_from_zero;
using testing::random_tensor;

TEST_CASE("matmul by the identity is the identity") {
  const Tensor a = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  const Tensor eye = Tensor::from_values({2, 2}, {1, 0, 0, 1});
  const Tensor c = ops::matmul(a, eye);
  CHECK(std::vector<double>(c.data().begin(), c.data().end()) == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("softmax of equal logits is uniform") {
  const Tensor s = ops::softmax_lastdim(Tensor::from_values({2}, {0, 0}));
  CHECK(s.at(0) == doctest::Approx(0.5));
  CHECK(s.at(1) == doctest::Approx(0.5));
}

TEST_CASE("max over rows per column") {
  const Tensor m = ops::max_rows(Tensor::from_values({2, 2}, {1, 3, 2, 0}));
  CHECK(m.shape() == Shape{1, 2});
  CHECK(m.at(0) == 2.0);
  CHECK(m.at(1) == 3.0);
}

TEST_CASE("shape mismatches raise ShapeError") {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({2, 2});
  CHECK_THROWS_AS(ops::matmul(a, b), ShapeError);
  CHECK_THROWS_AS(ops::add(a, Tensor::zeros({3, 3})), ShapeError);
  CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor::zeros({1, 1, 1, 1}), ShapeError);
}

TEST_CASE("broadcasting a row over a matrix") {
  const Tensor a = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  const Tensor r = Tensor::row({10, 20});
  const Tensor s = ops::add(a, r);
  CHECK(s.at(1, 1) == 24.0);
  const Tensor col = Tensor::from_values({2, 1}, {1, 2});
  CHECK(ops::mul(a, col).at(1, 0) == 6.0);
}

TEST_CASE("backward of sum and sum of squares") {
  Tensor x = Tensor::from_values({3}, {1, 2, 3}, true);
  ops::sum(x).backward();
  CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == std::vector<double>{1, 1, 1});

  Tensor y = Tensor::from_values({2}, {1, 2}, true);
  ops::sum(ops::square(y)).backward();
  CHECK(y.grad()[0] == 2.0);
  CHECK(y.grad()[1] == 4.0);
}

TEST_CASE("tied maxima split the gradient equally") {
  Tensor x = Tensor::from_values({3, 1}, {2, 5, 5}, true);
  ops::sum(ops::max_rows(x)).backward();
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 0.5);
  CHECK(x.grad()[2] == 0.5);

  Tensor y = Tensor::from_values({1, 4}, {1, 1, 1, 3}, true);
  ops::sum(ops::min_cols(y)).backward();
  CHECK(y.grad()[0] == doctest::Approx(1.0 / 3.0));
  CHECK(y.grad()[3] == 0.0);
}

TEST_CASE("non-scalar backward is a contract violation") {
  Tensor x = Tensor::from_values({2}, {1, 2}, true);
  CHECK_THROWS_AS(ops::square(x).backward(), ContractError);
}

TEST_CASE("gradients accumulate across backward calls") {
  Tensor x = Tensor::from_values({3}, {0.5, -1.0, 2.0}, true);
  const Tensor loss = ops::sum(ops::mul(ops::square(x), x));
  loss.backward();
  const std::vector<double> once(x.grad().begin(), x.grad().end());
  loss.backward();
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == 2.0 * once[i]);
  x.zero_grad();
  for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("debug checks reject non-finite values") {
  REQUIRE(debug_checks());
  const Tensor x = Tensor::from_values({2}, {0.0, 1.0});
  CHECK_THROWS_AS(ops::log(x), NumericsError);
  set_debug_checks(false);
  CHECK_NOTHROW(ops::log(x));
  set_debug_checks(true);
}

TEST_CASE("gradcheck oracles") {
  Rng rng(11);
  const auto sq = gradcheck([](const Tensor& t) { return ops::sum(ops::square(t)); },
                            random_tensor({5}, rng));
  CHECK(sq.max_rel_error < 1e-6);
  const auto relu = gradcheck([](const Tensor& t) { return ops::sum(ops::relu(t)); },
                              away_from_zero({5}, rng));
  CHECK(relu.max_rel_error < 1e-6);
  const auto constant = gradcheck([](const Tensor&) { return Tensor::scalar(3.0); },
                                  random_tensor({4}, rng));
  CHECK(constant.passed);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(constant.analytic[i] == 0.0);
    CHECK(constant.numeric[i] == 0.0);
  }
}

TEST_CASE("gradcheck catches a wrong gradient") {
  // detach hides the dependency, so the analytic gradient is zero.
  Rng rng(3);
  const auto r = gradcheck([](const Tensor& t) { return ops::sum(ops::mul(t.detach(), t)); },
                           random_tensor({3}, rng, 0.5, 1.0));
  CHECK_FALSE(r.passed);
}

namespace {

using Fn = std::function<Tensor(const Tensor&)>;

void check_op(const char* name, const Fn& f, const std::function<Tensor(Rng&)>& input) {
  Rng rng(std::hash<std::string>{}(name));
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = gradcheck(f, input(rng));
    INFO(std::string(name) << " trial " << trial << " rel err " << r.max_rel_error);
    CHECK(r.passed);
  }
}

}  // namespace

TEST_CASE("every primitive passes gradcheck") {
  auto mat = [](std::size_t r, std::size_t c) {
    return [=](Rng& rng) { return random_tensor({r, c}, rng); };
  };
  auto pos = [](std::size_t r, std::size_t c) {
    return [=](Rng& rng) { return random_tensor({r, c}, rng, 0.5, 2.0); };
  };
  Rng fixed(99);
  const Tensor other = random_tensor({3, 4}, fixed);
  const Tensor right = random_tensor({4, 2}, fixed);
  const Tensor row = random_tensor({1, 4}, fixed);
  const Tensor weights = random_tensor({3, 4}, fixed);
  const auto weighted = [weights](const Tensor& t) { return ops::sum(ops::mul(t, weights)); };

  check_op("add", [&](const Tensor& t) { return weighted(ops::add(t, other)); }, mat(3, 4));
  check_op("sub", [&](const Tensor& t) { return weighted(ops::sub(other, t)); }, mat(3, 4));
  check_op("mul", [&](const Tensor& t) { return weighted(ops::mul(t, t)); }, mat(3, 4));
  check_op("div", [&](const Tensor& t) { return weighted(ops::div(other, t)); }, pos(3, 4));
  check_op("broadcast_row", [&](const Tensor& t) { return weighted(ops::mul(other, t)); }, mat(1, 4));
  check_op("broadcast_to", [&](const Tensor& t) { return weighted(ops::broadcast_to(t, {3, 4})); },
           mat(1, 4));
  check_op("matmul_left", [&](const Tensor& t) { return ops::sum(ops::square(ops::matmul(t, right))); },
           mat(3, 4));
  check_op("matmul_right", [&](const Tensor& t) { return ops::sum(ops::square(ops::matmul(other, t))); },
           mat(4, 2));
  check_op("transpose", [&](const Tensor& t) { return weighted(ops::transpose(t)); }, mat(4, 3));
  check_op("reshape", [&](const Tensor& t) { return weighted(ops::reshape(t, {3, 4})); }, mat(2, 6));
  check_op("gather_rows",
           [&](const Tensor& t) {
             const std::array<std::size_t, 3> idx{2, 0, 2};
             return weighted(ops::gather_rows(t, idx));
           },
           mat(3, 4));
  check_op("concat_rows",
           [&](const Tensor& t) {
             const std::array<Tensor, 2> parts{t, row};
             return ops::sum(ops::square(ops::concat_rows(parts)));
           },
           mat(2, 4));
  check_op("concat_cols",
           [&](const Tensor& t) {
             const std::array<Tensor, 2> parts{t, t};
             return ops::sum(ops::mul(ops::concat_cols(parts), weights));
           },
           mat(3, 2));
  check_op("slice", [&](const Tensor& t) { return ops::sum(ops::square(ops::slice_cols(ops::slice_rows(t, 1, 3), 1, 3))); },
           mat(3, 4));
  check_op("relu", [&](const Tensor& t) { return weighted(ops::relu(t)); },
           [](Rng& rng) { return away_from_zero({3, 4}, rng); });
  check_op("sigmoid", [&](const Tensor& t) { return weighted(ops::sigmoid(t)); }, mat(3, 4));
  check_op("softplus", [&](const Tensor& t) { return weighted(ops::softplus(t)); }, mat(3, 4));
  check_op("exp", [&](const Tensor& t) { return weighted(ops::exp(t)); }, mat(3, 4));
  check_op("log", [&](const Tensor& t) { return weighted(ops::log(t)); }, pos(3, 4));
  check_op("sqrt", [&](const Tensor& t) { return weighted(ops::sqrt(t)); }, pos(3, 4));
  check_op("neg", [&](const Tensor& t) { return weighted(ops::neg(t)); }, mat(3, 4));
  check_op("scale", [&](const Tensor& t) { return weighted(ops::add_scalar(ops::scale(t, 2.5), 1.0)); },
           mat(3, 4));
  check_op("clamp", [&](const Tensor& t) { return weighted(ops::clamp(t, -0.5, 0.5)); },
           [](Rng& rng) { return away_from_zero({3, 4}, rng); });
  check_op("softmax", [&](const Tensor& t) { return weighted(ops::softmax_lastdim(t)); }, mat(3, 4));
  check_op("log_softmax", [&](const Tensor& t) { return weighted(ops::log_softmax_lastdim(t)); },
           mat(3, 4));
  check_op("mean", [&](const Tensor& t) { return ops::mean(ops::square(t)); }, mat(3, 4));
  check_op("sum_rows", [&](const Tensor& t) { return ops::sum(ops::square(ops::sum_rows(t))); }, mat(3, 4));
  check_op("sum_cols", [&](const Tensor& t) { return ops::sum(ops::square(ops::sum_cols(t))); }, mat(3, 4));
  check_op("mean_rows", [&](const Tensor& t) { return ops::sum(ops::square(ops::mean_rows(t))); }, mat(3, 4));
  check_op("mean_cols", [&](const Tensor& t) { return ops::sum(ops::square(ops::mean_cols(t))); }, mat(3, 4));
  check_op("max_rows", [&](const Tensor& t) { return ops::sum(ops::square(ops::max_rows(t))); }, mat(3, 4));
  check_op("min_rows", [&](const Tensor& t) { return ops::sum(ops::square(ops::min_rows(t))); }, mat(3, 4));
  check_op("max_cols", [&](const Tensor& t) { return ops::sum(ops::square(ops::max_cols(t))); }, mat(3, 4));
  check_op("min_cols", [&](const Tensor& t) { return ops::sum(ops::square(ops::min_cols(t))); }, mat(3, 4));
  check_op("std_rows", [&](const Tensor& t) { return ops::sum(ops::std_rows(t)); }, mat(3, 4));
  check_op("pairwise_sqdist",
           [&](const Tensor& t) { return ops::sum(ops::pairwise_sqdist(t, other)); }, mat(2, 4));
  check_op("pairwise_dist", [&](const Tensor& t) { return ops::sum(ops::pairwise_dist(t)); }, mat(4, 3));
}

TEST_CASE("pairwise distances") {
  const Tensor x = Tensor::from_values({2, 2}, {0, 0, 3, 4});
  CHECK(ops::pairwise_dist(x).at(0, 1) == doctest::Approx(5.0));
  CHECK(ops::pairwise_sqdist(x, x).at(1, 0) == doctest::Approx(25.0));
}

TEST_CASE("population std is zero for a single row") {
  const Tensor s = ops::std_rows(Tensor::from_values({1, 2}, {3, 4}));
  CHECK(s.at(0) == 0.0);
  const Tensor t = ops::std_rows(Tensor::from_values({2, 1}, {1, 3}));
  CHECK(t.at(0) == doctest::Approx(1.0));
}

TEST_CASE("rng streams are reproducible and splittable") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng(42).next_u64() != c.next_u64());
  CHECK(Rng(5).split(1).next_u64() == Rng(5).split(1).next_u64());
  CHECK(Rng(5).split(1).next_u64() != Rng(5).split(2).next_u64());

  Rng s(7);
  s.normal();  // leaves a cached normal behind
  const Rng restored = Rng::deserialize(s.serialize());
  CHECK(restored == s);
  Rng r1 = restored;
  for (int i = 0; i < 5; ++i) CHECK(r1.normal() == s.normal());
}

TEST_CASE("rng distributions have the right moments") {
  Rng rng(2024);
  const int n = 100000;
  double sum = 0, sq = 0, psum = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
    psum += rng.poisson(9.0);
  }
  CHECK(std::abs(sum / n) < 3.0 / std::sqrt(n) * 1.5);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  CHECK(std::abs(psum / n - 9.0) < 0.05);
  std::array<int, 3> counts{};
  for (int i = 0; i < 30000; ++i) ++counts[rng.uniform_index(3)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 300);
}
