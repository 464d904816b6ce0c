#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "setgen/errors.hpp"
#include "setgen/metrics.hpp"
#include "setgen/synthetic.hpp"
#include "setgen/trainer.hpp"

using namespace setgen;
using namespace setgen::trainer;

namespace {

vae::SetVae small_model(const std::vector<PointSet>& sets, std::uint64_t seed = 3) {
  vae::ModelConfig cfg;
  cfg.latent_dim = 4;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.blocks = 1;
  cfg.max_size = 6;
  return vae::SetVae::init(cfg, size_counts(sets), seed);
}

std::vector<PointSet> small_data(std::size_t count = 16) {
  return synth::gen_dataset(synth::SynthConfig{.size_max = 6}, count, 2).sets;
}

}  // namespace

TEST_CASE("same-size batching") {
  Rng rng(1);
  auto batches = make_batches(std::vector<std::size_t>{3, 3, 5}, 2, rng);
  REQUIRE(batches.size() == 2);
  std::sort(batches.begin(), batches.end(), [](const Batch& a, const Batch& b) { return a.size() > b.size(); });
  std::sort(batches[0].begin(), batches[0].end());
  CHECK(batches[0] == Batch{0, 1});
  CHECK(batches[1] == Batch{2});

  std::vector<std::size_t> sizes;
  for (int i = 0; i < 200; ++i) sizes.push_back(2 + rng.uniform_index(7));
  for (std::size_t bs : {1u, 3u, 32u}) {
    const auto bb = make_batches(sizes, bs, rng);
    std::multiset<std::size_t> seen;
    for (const auto& b : bb) {
      CHECK(b.size() <= bs);
      for (std::size_t i : b) {
        CHECK(sizes[i] == sizes[b[0]]);
        seen.insert(i);
      }
    }
    CHECK(seen.size() == sizes.size());
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == sizes.size());
  }
  CHECK_THROWS_AS(make_batches(sizes, 0, rng), ContractError);
}

TEST_CASE("training is bit-reproducible and bookkeeping is exact") {
  const auto sets = small_data();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  auto m1 = small_model(sets), m2 = small_model(sets);
  Trainer t1(m1, sets, cfg, 9), t2(m2, sets, cfg, 9);
  const auto& a = t1.run();
  const auto& b = t2.run();
  CHECK(a.to_csv() == b.to_csv());
  REQUIRE(!a.steps.empty());
  for (const auto& s : a.steps) {
    CHECK(std::isfinite(s.total));
    CHECK(std::abs(s.total - (s.w2 + s.kl + s.reg2 + s.reg3 + s.aux_n)) <= 1e-12);
  }
  CHECK(a.epochs.size() == 3);
  CHECK(a.to_csv().rfind("step,total,w2,kl,reg2,reg3,aux_n,lr", 0) == 0);
}

TEST_CASE("reconstruction improves on singleton sets") {
  std::vector<PointSet> sets;
  Rng rng(4);
  for (int i = 0; i < 8; ++i) sets.push_back(testing::random_matrix(1, 3, rng, 0, 4));
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 8;
  cfg.adam.lr = 1e-2;
  cfg.weights.kl = 0;
  cfg.weights.min_dist = 0;
  cfg.weights.valency = 0;
  cfg.size_aux_weight = 0;
  cfg.sample_latent = false;
  auto model = small_model(sets);
  const double before = metrics::eval_reconstruction(model, sets);
  Trainer t(model, sets, cfg, 5);
  const auto& log = t.run();
  CHECK(log.steps.size() == 200);
  const double after = metrics::eval_reconstruction(model, sets);
  CHECK(after < 0.5 * before);
}

TEST_CASE("plateau cut halves the default rate") {
  nn::PlateauScheduler s(nn::PlateauConfig{.patience = 2});
  double lr = nn::AdamConfig{}.lr;
  for (double m : {1.0, 1.0, 1.0}) lr = s.step(m, lr);
  CHECK(lr == 1e-4);

  const auto sets = small_data(4);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 4;
  cfg.adam.lr = 0.0;  // frozen model, so the metric cannot improve
  cfg.plateau.patience = 1;
  cfg.plateau.min_lr = 0.0;
  cfg.sample_latent = false;
  auto model = small_model(sets);
  Trainer t(model, sets, cfg, 6);
  t.run();
  CHECK(t.scheduler().cuts() >= 1);
}

TEST_CASE("non-finite loss aborts with the step index") {
  auto sets = small_data(4);
  sets[0](0, 0) = std::nan("");
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 1;
  auto model = small_model(small_data(4));
  Trainer t(model, sets, cfg, 7);
  CHECK_THROWS_AS(t.run(), NumericsError);
}
