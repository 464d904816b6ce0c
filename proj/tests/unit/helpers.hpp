#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "setgen/matrix.hpp"
#include "setgen/rng.hpp"
#include "setgen/tensor.hpp"

namespace testing {

inline setgen::Tensor random_tensor(setgen::Shape shape, setgen::Rng& rng, double lo = -1.0,
                                    double hi = 1.0) {
  std::vector<double> v(setgen::shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return setgen::Tensor::from_values(std::move(shape), std::move(v));
}

// Values bounded away from zero, for relu and hinge checks.
inline setgen::Tensor away_from_zero(setgen::Shape shape, setgen::Rng& rng, double margin = 0.1) {
  std::vector<double> v(setgen::shape_numel(shape));
  for (double& x : v) {
    const double m = rng.uniform(margin, 1.5);
    x = rng.uniform() < 0.5 ? -m : m;
  }
  return setgen::Tensor::from_values(std::move(shape), std::move(v));
}

inline setgen::Matrix random_matrix(std::size_t r, std::size_t c, setgen::Rng& rng,
                                    double lo = -1.0, double hi = 1.0) {
  setgen::Matrix m(r, c);
  for (double& x : m.values()) x = rng.uniform(lo, hi);
  return m;
}

inline std::vector<std::size_t> permutation(std::size_t n, setgen::Rng& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.uniform_index(i)]);
  return p;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
