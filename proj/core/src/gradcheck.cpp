#include "setgen/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "setgen/errors.hpp"

namespace setgen {

GradcheckReport gradcheck(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                          double h, double rtol) {
  if (!(h > 0.0)) throw ContractError("gradcheck: step must be positive");
  std::vector<double> point(x.data().begin(), x.data().end());

  Tensor probe = Tensor::from_values(x.shape(), point, true);
  f(probe).backward();
  GradcheckReport report;
  report.analytic = probe.has_grad() ? std::vector<double>(probe.grad().begin(), probe.grad().end())
                                     : std::vector<double>(point.size(), 0.0);
  report.numeric.resize(point.size());

  for (std::size_t i = 0; i < point.size(); ++i) {
    auto shifted = point;
    shifted[i] = point[i] + h;
    const double up = f(Tensor::from_values(x.shape(), shifted)).item();
    shifted[i] = point[i] - h;
    const double down = f(Tensor::from_values(x.shape(), shifted)).item();
    report.numeric[i] = (up - down) / (2.0 * h);

    const double a = report.analytic[i];
    const double n = report.numeric[i];
    const double abs_err = std::abs(a - n);
    const double rel_err = abs_err / std::max({1.0, std::abs(a), std::abs(n)});
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    if (rel_err > report.max_rel_error) {
      report.max_rel_error = rel_err;
      report.worst_index = i;
    }
  }
  report.passed = report.max_rel_error <= rtol;
  return report;
}

}  // namespace setgen
