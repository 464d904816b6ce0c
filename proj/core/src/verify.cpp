#include "setgen/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "setgen/errors.hpp"
#include "setgen/losses.hpp"
#include "setgen/nn.hpp"
#include "setgen/ops.hpp"
#include "setgen/synthetic.hpp"

namespace setgen::verify {

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.uniform_index(i)]);
  return p;
}

PointSet randomize(const PointSet& x, Rng& rng) {
  return x.permute_rows(random_permutation(x.rows(), rng));
}

PointSet canonical_order(const PointSet& y) {
  std::vector<std::size_t> order(y.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = y.row(a), rb = y.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return y.permute_rows(order);
}

PointSet prop2_construct(const PointSet& y) {
  const std::size_t n = y.rows(), d = y.cols();
  if (n < 1) throw ContractError("prop2 needs at least one point");
  const PointSet sorted = canonical_order(y);
  const auto z = sorted.values();  // flattened, length n*d
  Matrix w1(n, n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) w1(i, i * d + k) = 1.0;
  Matrix w2(n * d, d, 0.0);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t k = 0; k < d; ++k) w2(b * d + k, k) = 1.0;
  // Reference set R = I_n, so e_i^T W1 is row i of W1.
  PointSet out(n, d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < n * d; ++q) {
      const double hidden = w1(i, q) * z[q];
      if (hidden == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) out(i, k) += hidden * w2(q, k);
    }
  }
  return out;
}

double prop2_construct_and_check(const PointSet& y) {
  return losses::w2_equal_value(prop2_construct(y), y);
}

namespace {

PointSet random_set(std::size_t n, std::size_t d, Rng& rng) {
  PointSet x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) x(i, k) = rng.uniform(-2.0, 2.0);
  return x;
}

CheckResult make_check(std::string name, double value, double threshold, bool expect_violation) {
  CheckResult c{std::move(name), value, threshold, expect_violation, false};
  c.passed = expect_violation ? value >= threshold : value < threshold;
  return c;
}

// Invariant discriminator: MLP(pna_pool(MLP(X))).
struct ToyDiscriminator {
  nn::Mlp point;
  nn::Mlp head;
  double operator()(const PointSet& x) const {
    const Tensor h = nn::mlp_forward(point, Tensor::from_matrix(x));
    return nn::mlp_forward(head, nn::pna_pool(h)).item();
  }
};

double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

}  // namespace

double max_permutation_deviation(const PairLoss& loss, std::size_t trials, Rng& rng,
                                 std::size_t max_n) {
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.uniform_index(max_n);
    const PointSet x = random_set(n, 3, rng);
    const PointSet x_hat = random_set(n, 3, rng);
    const double base = loss(x, x_hat);
    const double moved = loss(randomize(x, rng), x_hat);
    worst = std::max(worst, std::abs(moved - base));
  }
  return worst;
}

std::vector<CheckResult> check_loss_perm_invariance(std::size_t trials, std::uint64_t seed) {
  Rng init(seed);
  ToyDiscriminator disc{nn::Mlp::init({3, 16, 16}, init), nn::Mlp::init({64, 16, 1}, init)};
  losses::LossWeights weights;
  const std::vector<std::pair<std::string, PairLoss>> losses_under_test = {
      {"chamfer", [](const PointSet& x, const PointSet& y) { return losses::chamfer_value(x, y); }},
      {"w2_equal", [](const PointSet& x, const PointSet& y) { return losses::w2_equal_value(x, y); }},
      {"vae_total_loss",
       [&](const PointSet& x, const PointSet& y) {
         const Tensor mu = Tensor::row({0.3, -0.2});
         const Tensor logvar = Tensor::row({0.1, -0.4});
         return losses::vae_total_loss(Tensor::from_matrix(x), Tensor::from_matrix(y), mu, logvar,
                                       weights)
             .total.item();
       }},
      {"gan_invariant_discriminator",
       [&](const PointSet& x, const PointSet& y) {
         return softplus(-disc(x)) + softplus(disc(y));
       }},
  };
  std::vector<CheckResult> out;
  for (std::size_t k = 0; k < losses_under_test.size(); ++k) {
    Rng rng = Rng(seed).split(k + 1);
    const auto& [name, fn] = losses_under_test[k];
    const double threshold = name == "chamfer" ? 1e-12 : 1e-10;
    out.push_back(make_check("loss_invariance." + name,
                             max_permutation_deviation(fn, trials, rng), threshold, false));
  }
  Rng rng = Rng(seed).split(99);
  const PairLoss first_row = [](const PointSet& x, const PointSet& y) {
    return trainer::first_row_loss(Tensor::from_matrix(x), Tensor::from_matrix(y)).item();
  };
  out.push_back(make_check("loss_invariance.first_row_negative_control",
                           max_permutation_deviation(first_row, trials, rng, 8), 1e-6, true));
  return out;
}

EquivarianceReport check_training_equivariance(const ModelFactory& factory,
                                               const std::vector<PointSet>& sets,
                                               trainer::TrainConfig cfg, std::size_t steps,
                                               std::uint64_t seed, double tolerance) {
  EquivarianceReport r;
  r.steps = steps;
  if (steps == 0) {
    r.passed = true;
    return r;
  }
  cfg.max_steps = steps;
  cfg.epochs = std::numeric_limits<std::size_t>::max();

  std::vector<PointSet> permuted;
  Rng perm_rng = Rng(seed).split(0xbeef);
  for (const auto& s : sets) permuted.push_back(randomize(s, perm_rng));

  auto run = [&](const std::vector<PointSet>& data, std::vector<double>& losses) {
    vae::SetVae model = factory();
    trainer::Trainer t(model, data, cfg, seed);
    t.run();
    for (const auto& s : t.log().steps) losses.push_back(s.total);
    return model;
  };
  const vae::SetVae a = run(sets, r.losses_a);
  const vae::SetVae b = run(permuted, r.losses_b);

  auto rel = [](double x, double y) {
    const double scale = std::max({std::abs(x), std::abs(y), 1e-300});
    return std::abs(x - y) / scale;
  };
  const std::size_t common = std::min(r.losses_a.size(), r.losses_b.size());
  for (std::size_t i = 0; i < common; ++i)
    r.max_rel_diff = std::max(r.max_rel_diff, rel(r.losses_a[i], r.losses_b[i]));
  const auto pa = a.params(), pb = b.params();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto da = pa[i].tensor.data(), db = pb[i].tensor.data();
    for (std::size_t k = 0; k < da.size(); ++k) {
      r.max_param_rel_diff =
          std::max(r.max_param_rel_diff, std::abs(da[k] - db[k]) / std::max(1.0, std::abs(da[k])));
    }
  }
  r.passed = common == steps && r.losses_a.size() == r.losses_b.size() && r.max_rel_diff < tolerance;
  return r;
}

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string SuiteReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  auto arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"value", c.value},
                   {"threshold", c.threshold},
                   {"expect_violation", c.expect_violation},
                   {"passed", c.passed}});
  }
  j["checks"] = arr;
  return j.dump(2);
}

std::vector<std::string> suite_names() { return {"loss", "training", "prop2", "ordering", "all"}; }

namespace {

std::vector<PointSet> small_dataset(std::uint64_t seed) {
  synth::SynthConfig cfg;
  cfg.size_max = 6;
  cfg.size_mean = 4.0;
  return synth::gen_dataset(cfg, 24, seed).sets;
}

vae::ModelConfig tiny_model(vae::EncoderPooling pooling) {
  vae::ModelConfig m;
  m.latent_dim = 8;
  m.hidden = 16;
  m.heads = 2;
  m.blocks = 1;
  m.angle_dim = 8;
  m.max_size = 6;
  m.pooling = pooling;
  return m;
}

void training_checks(std::uint64_t seed, std::vector<CheckResult>& out) {
  const auto sets = small_dataset(seed);
  std::map<std::size_t, double> counts;
  for (const auto& s : sets) counts[s.rows()] += 1.0;
  trainer::TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.adam.lr = 1e-3;
  auto factory = [&](vae::EncoderPooling pooling) {
    return [=]() { return vae::SetVae::init(tiny_model(pooling), counts, seed); };
  };
  constexpr std::size_t kSteps = 50;
  const auto ok = check_training_equivariance(factory(vae::EncoderPooling::pna), sets, cfg, kSteps, seed);
  out.push_back(make_check("training_equivariance.pna_w2", ok.max_rel_diff, 1e-6, false));

  auto bad_loss = cfg;
  bad_loss.recon = trainer::ReconLoss::first_row;
  const auto r1 =
      check_training_equivariance(factory(vae::EncoderPooling::pna), sets, bad_loss, kSteps, seed);
  out.push_back(make_check("training_equivariance.first_row_negative_control", r1.max_rel_diff,
                           1e-6, true));
  const auto r2 =
      check_training_equivariance(factory(vae::EncoderPooling::ordered), sets, cfg, kSteps, seed);
  out.push_back(make_check("training_equivariance.ordered_pooling_negative_control",
                           r2.max_rel_diff, 1e-6, true));
}

void prop2_checks(std::uint64_t seed, std::vector<CheckResult>& out) {
  Rng rng = Rng(seed).split(7);
  double worst = 0.0;
  for (std::size_t t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.uniform_index(8);
    PointSet y = random_set(n, 3, rng);
    if (n > 1 && t % 4 == 0) {
      const auto src = y.row(0);
      for (std::size_t k = 0; k < 3; ++k) y(n - 1, k) = src[k];  // duplicate row
    }
    worst = std::max(worst, prop2_construct_and_check(y));
  }
  out.push_back(make_check("prop2.residual_w2", worst, 1e-9, false));
}

void ordering_checks(std::uint64_t seed, std::vector<CheckResult>& out) {
  Rng rng = Rng(seed).split(11);
  double mismatches = 0.0;
  for (std::size_t t = 0; t < 100; ++t) {
    const PointSet y = random_set(1 + rng.uniform_index(8), 3, rng);
    const PointSet moved = randomize(y, rng);
    if (!(canonical_order(moved) == canonical_order(y))) mismatches += 1.0;
    auto sorted_values = [](const PointSet& s) {
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < s.rows(); ++i) rows.emplace_back(s.row(i).begin(), s.row(i).end());
      std::sort(rows.begin(), rows.end());
      return rows;
    };
    if (sorted_values(moved) != sorted_values(y)) mismatches += 1.0;
  }
  out.push_back(make_check("ordering.canonical_and_randomize", mismatches, 0.5, false));
}

}  // namespace

SuiteReport run_suite(const std::string& suite, std::uint64_t seed) {
  SuiteReport r;
  const bool all = suite == "all";
  bool known = all;
  if (all || suite == "loss") {
    known = true;
    const auto checks = check_loss_perm_invariance(100, seed);
    r.checks.insert(r.checks.end(), checks.begin(), checks.end());
  }
  if (all || suite == "training") {
    known = true;
    training_checks(seed, r.checks);
  }
  if (all || suite == "prop2") {
    known = true;
    prop2_checks(seed, r.checks);
  }
  if (all || suite == "ordering") {
    known = true;
    ordering_checks(seed, r.checks);
  }
  if (!known) throw ContractError("unknown verify suite '" + suite + "'");
  return r;
}

}  // namespace setgen::verify
