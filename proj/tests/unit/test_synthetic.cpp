#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "setgen/errors.hpp"
#include "setgen/synthetic.hpp"

using namespace setgen;
using namespace setgen::synth;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("setgen_test_" + name)).string();
}

// Independent audit, written without the library's checker.
bool audit(const PointSet& x, const SynthConfig& cfg) {
  const std::size_t n = x.rows();
  std::vector<std::size_t> deg(n, 0);
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 3; ++k)
      if (x(i, k) < cfg.box_min || x(i, k) > cfg.box_max) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0;
      for (std::size_t k = 0; k < 3; ++k) d2 += (x(i, k) - x(j, k)) * (x(i, k) - x(j, k));
      const double d = std::sqrt(d2);
      if (d <= cfg.min_distance) return false;
      if (d <= cfg.neighbor_distance) {
        ++deg[i];
        ++deg[j];
        parent[find(i)] = find(j);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (n >= 2 && deg[i] < 1) return false;
    if (deg[i] > cfg.max_neighbors) return false;
    if (find(i) != find(0)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("config validation") {
  SynthConfig c;
  CHECK_NOTHROW(c.validate());
  c.min_distance = 1.2;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = SynthConfig{};
  c.size_min = 1;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = SynthConfig{};
  c.max_neighbors = 0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  const SynthConfig e = SynthConfig{}.extrapolation();
  CHECK(e.size_mean == 19.0);
  CHECK(e.size_max == 45);
}

TEST_CASE("two-point sets respect both distance bounds") {
  SynthConfig cfg;
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const PointSet x = sample_set_of_size(cfg, 2, rng);
    const double d = std::sqrt(squared_distance(x.row(0), x.row(1)));
    CHECK(d > cfg.min_distance);
    CHECK(d <= cfg.neighbor_distance);
  }
}

TEST_CASE("1000 sampled sets pass the independent audit") {
  SynthConfig cfg;
  Rng rng(2);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const PointSet x = sample_set(cfg, rng);
    if (!audit(x, cfg)) ++violations;
    CHECK(constraint_violations(x, cfg).empty());
    CHECK(derive_graph(x, cfg.neighbor_distance).connected());
  }
  CHECK(violations == 0);
}

TEST_CASE("default dataset matches the size law and is reproducible") {
  const SynthConfig cfg;
  const SetDataset d = gen_dataset(cfg, 2000, 7);
  CHECK(d.size() == 2000);
  CHECK(std::abs(d.mean_size() - 9.0) <= 1.0);
  for (const auto& s : d.sets) {
    CHECK(s.rows() >= 2);
    CHECK(s.rows() <= 35);
  }
  double total = 0.0;
  for (const auto& [n, p] : d.size_histogram()) total += p;
  CHECK(total == doctest::Approx(1.0));
  const SetDataset again = gen_dataset(cfg, 2000, 7);
  CHECK(again.sets == d.sets);
  CHECK(gen_dataset(cfg, 1, 3).size() == 1);
  CHECK_FALSE(gen_dataset(cfg, 5, 8).sets == gen_dataset(cfg, 5, 9).sets);
}

TEST_CASE("impossible configurations raise GenerationError") {
  SynthConfig cfg;
  cfg.box_max = 1.0;  // a unit box cannot hold 35 points 0.9 apart
  cfg.size_min = 30;
  cfg.size_mean = 32;
  cfg.attempts = 200;
  cfg.max_restarts = 3;
  Rng rng(3);
  CHECK_THROWS_AS(sample_set(cfg, rng), GenerationError);
}

TEST_CASE("graph derivation and valencies") {
  const double nb = 1.1;
  const PointSet far = Matrix::from_rows({{0, 0, 0}, {2 * nb, 0, 0}});
  CHECK(derive_graph(far, nb).edge_count() == 0);
  const PointSet path = Matrix::from_rows({{0, 0, 0}, {0.9 * nb, 0, 0}, {1.8 * nb, 0, 0}});
  const auto a = derive_graph(path, nb);
  CHECK(a.degrees() == std::vector<std::size_t>{1, 2, 1});
  CHECK(valency_of(path, nb) == std::vector<std::size_t>{1, 2, 1});
  CHECK(valency_of(Matrix::from_rows({{1, 2, 3}}), nb) == std::vector<std::size_t>{0});
  Rng rng(4);
  const PointSet x = sample_set(SynthConfig{}, rng);
  const auto g = derive_graph(x, nb);
  std::size_t sum = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK_FALSE(g(i, i));
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(g(i, j) == g(j, i));
  }
  for (std::size_t d : valency_of(x, nb)) sum += d;
  CHECK(sum == 2 * g.edge_count());
}

TEST_CASE("dataset io roundtrip and malformed input") {
  const std::string path = temp_path("roundtrip.jsonl");
  const SetDataset d = gen_dataset(SynthConfig{}, 3, 11);
  write_dataset(path, d, std::string(R"({"note": "test"})"));
  const SynthConfig cfg;
  const SetDataset back = read_dataset(path, &cfg);
  CHECK(back.sets == d.sets);  // bit-identical coordinates
  CHECK(std::filesystem::exists(path + ".header.json"));

  const std::string empty = temp_path("empty.jsonl");
  { std::ofstream f(empty); }
  CHECK_THROWS_AS(read_dataset(empty), IoError);

  const std::string broken = temp_path("broken.jsonl");
  {
    std::ofstream f(broken);
    f << R"({"points": [[0,0,0],[1,0,0]]})" << "\n" << R"({"points": [[0,0,0],[1,0)" << "\n";
  }
  try {
    read_dataset(broken);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(read_dataset(temp_path("missing.jsonl")), IoError);

  // Sets violating the constraints are rejected when a config is supplied.
  const std::string bad = temp_path("bad.jsonl");
  {
    std::ofstream f(bad);
    f << R"({"points": [[0,0,0],[0.1,0,0]]})" << "\n";
  }
  CHECK_THROWS_AS(read_dataset(bad, &cfg), IoError);
  CHECK_NOTHROW(read_dataset(bad));
}
