#pragma once

#include <functional>
#include <vector>

#include "setgen/tensor.hpp"

namespace setgen {

struct GradcheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> analytic;
  std::vector<double> numeric;
  bool passed = false;
};

// Compares the reverse-mode gradient of a scalar function at `x` with central
// differences (f(x + h e_i) - f(x - h e_i)) / 2h. The relative error of entry i
// is |a_i - n_i| / max(1, |a_i|, |n_i|), so gradients near zero are judged in
// absolute terms.
GradcheckReport gradcheck(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                          double h = 1e-6, double rtol = 1e-4);

}  // namespace setgen
