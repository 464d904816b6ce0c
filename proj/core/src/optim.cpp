#include "setgen/optim.hpp"

#include <algorithm>
#include <cmath>

#include "setgen/errors.hpp"

namespace setgen::nn {

Adam::Adam(ParamList params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) throw ContractError("adam: parameter '" + p.name + "' has no gradient");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor param = params_[k].tensor;
    auto values = param.mutable_data();
    const auto grad = param.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

void Adam::restore(std::uint64_t steps, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw ContractError("adam restore: moment count mismatch");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (m[k].size() != params_[k].tensor.numel() || v[k].size() != params_[k].tensor.numel()) {
      throw ContractError("adam restore: moment shape mismatch for " + params_[k].name);
    }
  }
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

PlateauScheduler::PlateauScheduler(PlateauConfig config) : config_(config) {
  if (config_.patience == 0) throw ContractError("plateau scheduler: patience must be >= 1");
}

double PlateauScheduler::step(double metric, double lr) {
  if (metric < best_ * (1.0 - config_.rel_threshold)) {
    best_ = metric;
    bad_epochs_ = 0;
    return lr;
  }
  if (++bad_epochs_ >= config_.patience) {
    bad_epochs_ = 0;
    ++cuts_;
    return std::max(lr * config_.factor, config_.min_lr);
  }
  return lr;
}

void PlateauScheduler::restore(double best, std::size_t bad_epochs, std::size_t cuts) {
  best_ = best;
  bad_epochs_ = bad_epochs;
  cuts_ = cuts;
}

double plateau_lr(std::span<const double> history, double lr, PlateauConfig config) {
  PlateauScheduler scheduler(config);
  for (double metric : history) lr = scheduler.step(metric, lr);
  return lr;
}

}  // namespace setgen::nn
