#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "setgen/errors.hpp"
#include "setgen/gradcheck.hpp"
#include "setgen/losses.hpp"
#include "setgen/ops.hpp"
#include "setgen/vae.hpp"

using namespace setgen;
using namespace setgen::vae;
using testing::max_abs_diff;
using testing::permutation;
using testing::random_tensor;

namespace {

ModelConfig small_config(CreatorKind creator = CreatorKind::topn) {
  ModelConfig m;
  m.latent_dim = 4;
  m.hidden = 8;
  m.heads = 2;
  m.blocks = 1;
  m.angle_dim = 3;
  m.low_dim = 2;
  m.max_size = 5;
  m.creator = creator;
  return m;
}

const std::map<std::size_t, double> kHist{{2, 1.0}, {3, 2.0}, {5, 1.0}};

}  // namespace

TEST_CASE("enum names round-trip") {
  for (auto k : {CreatorKind::mlp, CreatorKind::iid, CreatorKind::firstn, CreatorKind::topn})
    CHECK(parse_creator(to_string(k)) == k);
  CHECK(parse_size_mode("learned") == SizeMode::learned);
  CHECK(parse_pooling("ordered") == EncoderPooling::ordered);
  CHECK_THROWS_AS(parse_creator("topk"), ContractError);
}

TEST_CASE("encoder is permutation invariant") {
  const SetVae model = SetVae::init(ModelConfig{}, kHist, 1);
  Rng rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(10);
    const Tensor x = random_tensor({n, 3}, rng, 0, 4);
    const Tensor px = ops::gather_rows(x, permutation(n, rng));
    const Encoded a = model.encode(x), b = model.encode(px);
    worst = std::max({worst, max_abs_diff(a.mu.data(), b.mu.data()),
                      max_abs_diff(a.logvar.data(), b.logvar.data())});
  }
  CHECK(worst < 1e-10);

  const Encoded single = model.encode(random_tensor({1, 3}, rng));
  for (double v : single.mu.data()) CHECK(std::isfinite(v));
  CHECK(single.mu.shape() == Shape{1, 32});
  CHECK_THROWS_AS(model.encode(random_tensor({3, 2}, rng)), ShapeError);
}

TEST_CASE("ordered pooling breaks invariance") {
  ModelConfig cfg = small_config();
  cfg.pooling = EncoderPooling::ordered;
  const SetVae model = SetVae::init(cfg, kHist, 3);
  Rng rng(4);
  const Tensor x = random_tensor({4, 3}, rng);
  const Tensor px = ops::gather_rows(x, std::vector<std::size_t>{1, 0, 2, 3});
  CHECK(max_abs_diff(model.encode(x).mu.data(), model.encode(px).mu.data()) > 1e-6);
}

TEST_CASE("encoder passes gradcheck") {
  const SetVae model = SetVae::init(small_config(), kHist, 5);
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor w = random_tensor({1, 4}, rng);
    const auto r = gradcheck(
        [&](const Tensor& x) {
          const Encoded e = model.encode(x);
          return ops::add(ops::sum(ops::mul(e.mu, w)), ops::sum(ops::mul(e.logvar, w)));
        },
        random_tensor({4, 3}, rng));
    CHECK(r.passed);
  }
}

TEST_CASE("reparameterization") {
  Rng rng(7);
  const Tensor mu = random_tensor({1, 5}, rng);
  const Tensor tiny = Tensor::full({1, 5}, -40.0);
  Rng a(1);
  CHECK(max_abs_diff(reparameterize(mu, tiny, a).data(), mu.data()) < 1e-8);
  Rng b(3), c(3);
  const Tensor lv = random_tensor({1, 5}, rng);
  CHECK(max_abs_diff(reparameterize(mu, lv, b).data(), reparameterize(mu, lv, c).data()) == 0.0);

  const Tensor m0 = Tensor::zeros({1, 1});
  const Tensor l0 = Tensor::full({1, 1}, std::log(2.5));
  Rng d(9);
  double s = 0, s2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = reparameterize(m0, l0, d).item();
    s += z;
    s2 += z * z;
  }
  const double var = s2 / n - (s / n) * (s / n);
  CHECK(std::abs(var - 2.5) / 2.5 < 0.05);

  Tensor mu_g = Tensor::from_values({1, 2}, {0.1, 0.2}, true);
  Tensor lv_g = Tensor::from_values({1, 2}, {0.3, -0.2}, true);
  Rng e(4);
  ops::sum(reparameterize(mu_g, lv_g, e)).backward();
  CHECK(mu_g.grad()[0] == 1.0);
  CHECK(lv_g.has_grad());
  CHECK_THROWS_AS(reparameterize(mu_g, Tensor::zeros({1, 3}), e), ShapeError);
}

TEST_CASE("decoder") {
  const SetVae model = SetVae::init(small_config(), kHist, 8);
  const std::size_t n0 = model.config().resolved_reference_size();
  CHECK(n0 == 10);
  CHECK(model.decoder().capacity() == 10);
  Rng rng(9);
  const Tensor z = random_tensor({1, 4}, rng);
  const Tensor full = model.decode(z, n0, rng);
  CHECK(full.shape() == Shape{10, 3});
  CHECK_THROWS_AS(model.decode(z, n0 + 1, rng), CapacityError);
  Rng r1(5), r2(5);
  CHECK(max_abs_diff(model.decode(z, 4, r1).data(), model.decode(z, 4, r2).data()) == 0.0);

  for (int trial = 0; trial < 10; ++trial) {
    const Tensor w = random_tensor({3, 3}, rng);
    const auto r = gradcheck(
        [&](const Tensor& t) {
          Rng local(1);
          return ops::sum(ops::mul(model.decode(t, 3, local), w));
        },
        random_tensor({1, 4}, rng));
    CHECK(r.passed);
  }
}

TEST_CASE("every creator decodes and reports its capacity") {
  Rng rng(10);
  for (auto kind : {CreatorKind::mlp, CreatorKind::iid, CreatorKind::firstn, CreatorKind::topn}) {
    const SetVae model = SetVae::init(small_config(kind), kHist, 11);
    CHECK(model.decoder().kind() == kind);
    const Tensor z = random_tensor({1, 4}, rng);
    CHECK(model.decode(z, 5, rng).shape() == Shape{5, 3});
    if (kind == CreatorKind::mlp || kind == CreatorKind::firstn) {
      CHECK(model.decoder().capacity() == 5);
      CHECK_THROWS_AS(model.decode(z, 6, rng), CapacityError);
    }
    if (kind == CreatorKind::iid) CHECK(model.decode(z, 40, rng).rows() == 40);
  }
}

TEST_CASE("empirical size model") {
  const SizeModel point = SizeModel::empirical({{5, 1.0}});
  Rng rng(12);
  for (int i = 0; i < 100; ++i) CHECK(point.sample_empirical(rng) == 5);
  CHECK(point.sample_empirical(rng, true) == 15);

  const SizeModel m = SizeModel::empirical(kHist);
  std::map<std::size_t, int> counts;
  const int n = 100000;
  double shifted = 0.0, plain = 0.0;
  for (int i = 0; i < n; ++i) ++counts[m.sample_empirical(rng)];
  for (const auto& [size, p] : m.histogram()) {
    const double expect = p * n;
    const double sigma = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(counts[size] - expect) < 3 * sigma);
  }
  for (int i = 0; i < 10000; ++i) {
    plain += static_cast<double>(m.sample_empirical(rng));
    shifted += static_cast<double>(m.sample_empirical(rng, true));
  }
  CHECK((shifted - plain) / 10000 == doctest::Approx(10.0).epsilon(0.02));
  CHECK_THROWS_AS(SizeModel::empirical({}), ContractError);
}

TEST_CASE("learned size model") {
  Rng rng(13);
  const SizeModel m = SizeModel::learned(kHist, 4, 8, 6, rng);
  CHECK(m.cap() == 6);
  const Tensor z = random_tensor({1, 4}, rng);
  nn::Mlp net = m.mlp();
  for (double& w : net.layers.back().weight.mutable_data()) w = 0.0;
  for (double& b : net.layers.back().bias.mutable_data()) b = 0.0;
  CHECK(m.auxiliary_loss(z, 3).item() == doctest::Approx(std::log(6.0)));
  net.layers.back().bias.mutable_data()[2] = 60.0;  // class for n = 3
  CHECK(m.auxiliary_loss(z, 3).item() < 1e-12);
  CHECK(m.predict(z) == 3);
  CHECK(m.predict(z, true) == 13);
  CHECK(m.sample(z, rng, false) == 3);
  CHECK_THROWS_AS(m.auxiliary_loss(z, 7), ContractError);
  CHECK_THROWS_AS(SizeModel::learned(kHist, 4, 8, 4, rng), ContractError);
}

TEST_CASE("generation") {
  const SetVae model = SetVae::init(small_config(), kHist, 14);
  Rng a(1), b(1);
  CHECK(generate(model, 0, a, false).sets.empty());
  const auto g1 = generate(model, 20, a, false);
  const auto g2 = generate(model, 20, b, false);
  CHECK(g1.sets == g2.sets);
  for (const auto& s : g1.sets) CHECK(kHist.count(s.rows()) == 1);

  // Top-n capacity is 10 here, so +10 extrapolation overflows and retries exhaust.
  Rng c(2);
  CHECK_THROWS_AS(generate(model, 3, c, true), CapacityError);
  ModelConfig wide = small_config();
  wide.reference_size = 16;
  const SetVae topn = SetVae::init(wide, kHist, 15);
  const auto ext = generate(topn, 10, c, true);
  for (const auto& s : ext.sets) CHECK(s.rows() >= 12);
  CHECK(ext.capacity_failures == 0);
}

TEST_CASE("forward pass and parameter bookkeeping") {
  SetVae model = SetVae::init(small_config(), kHist, 16);
  const auto params = model.params();
  std::set<std::string> names;
  for (const auto& p : params) {
    CHECK(p.tensor.requires_grad());
    names.insert(p.name);
  }
  CHECK(names.size() == params.size());

  Rng rng(17);
  const Tensor x = random_tensor({3, 3}, rng);
  Rng r1(4), r2(4);
  const auto f1 = model.forward(x, r1, false);
  CHECK(max_abs_diff(f1.z.data(), f1.mu.data()) == 0.0);
  CHECK(f1.x_hat.shape() == Shape{3, 3});
  const auto f2 = model.forward(x, r2, true);
  CHECK(max_abs_diff(f2.z.data(), f2.mu.data()) > 0.0);
}

TEST_CASE("end-to-end gradcheck on a two-set microbatch") {
  const SetVae model = SetVae::init(small_config(), kHist, 18);
  Rng rng(19);
  const Tensor x1 = random_tensor({3, 3}, rng, 0, 3), x2 = random_tensor({3, 3}, rng, 0, 3);
  const auto params = model.params();
  const losses::LossWeights w;
  const auto loss = [&] {
    Rng local(7);
    Tensor total;
    for (const Tensor* x : {&x1, &x2}) {
      const auto out = model.forward(*x, local, true);
      const Tensor l = losses::vae_total_loss(*x, out.x_hat, out.mu, out.logvar, w).total;
      total = total.defined() ? ops::add(total, l) : l;
    }
    return total;
  };
  for (auto p : params) p.tensor.zero_grad();
  loss().backward();
  const double h = 1e-6;
  for (const char* target : {"encoder.point_mlp.0.weight", "decoder.creator.w1", "decoder.head.1.weight"}) {
    const auto it = std::find_if(params.begin(), params.end(), [&](const nn::NamedParam& p) { return p.name == target; });
    REQUIRE_MESSAGE(it != params.end(), target);
    Tensor param = it->tensor;
    const std::vector<double> analytic(param.grad().begin(), param.grad().end());
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      double& v = param.mutable_data()[i];
      const double keep = v;
      v = keep + h;
      const double up = loss().item();
      v = keep - h;
      const double down = loss().item();
      v = keep;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(numeric - analytic[i]) /
                                  std::max({1.0, std::abs(numeric), std::abs(analytic[i])}));
    }
    INFO(target << " rel err " << worst);
    CHECK(worst < 1e-3);
  }
}
