#include "setgen/metrics.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "setgen/errors.hpp"
#include "setgen/losses.hpp"
#include "setgen/matching.hpp"

namespace setgen::metrics {

namespace {

std::vector<std::size_t> pooled_valencies(const std::vector<PointSet>& sets, double nb) {
  std::vector<std::size_t> out;
  for (const auto& x : sets) {
    const auto v = synth::valency_of(x, nb);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace

double valency_w2(const std::vector<std::size_t>& a_in, const std::vector<std::size_t>& b_in) {
  if (a_in.empty() || b_in.empty()) throw ContractError("valency_w2 needs two nonempty samples");
  std::vector<std::size_t> a = a_in, b = b_in;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size(), m = b.size();
  // Quantile k/(nm) falls on a[k / m] and b[k / n]; walk runs of constant pairs.
  double total = 0.0;
  std::size_t k = 0;
  const std::size_t grid = n * m;
  while (k < grid) {
    const std::size_t i = k / m, j = k / n;
    const std::size_t next = std::min((i + 1) * m, (j + 1) * n);
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[j]);
    total += d * d * static_cast<double>(next - k);
    k = next;
  }
  return total / static_cast<double>(grid);
}

double valency_w2(const std::vector<PointSet>& generated, const std::vector<PointSet>& reference,
                  double neighbor_distance) {
  return valency_w2(pooled_valencies(generated, neighbor_distance),
                    pooled_valencies(reference, neighbor_distance));
}

double incorrect_valency_pct(const std::vector<PointSet>& generated, std::size_t k_max,
                             double neighbor_distance) {
  const auto v = pooled_valencies(generated, neighbor_distance);
  if (v.empty()) throw ContractError("incorrect_valency_pct needs at least one point");
  const auto bad = std::count_if(v.begin(), v.end(),
                                 [&](std::size_t d) { return d < 1 || d > k_max; });
  return 100.0 * static_cast<double>(bad) / static_cast<double>(v.size());
}

double diversity_score(const std::vector<PointSet>& sets, std::size_t pairs, Rng& rng) {
  if (sets.size() < 2) throw ContractError("diversity_score needs at least 2 sets");
  if (pairs == 0) throw ContractError("diversity_score needs pairs >= 1");
  double total = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t i = rng.uniform_index(sets.size());
    std::size_t j = rng.uniform_index(sets.size() - 1);
    if (j >= i) ++j;
    total += matching::ot_uniform(sets[i], sets[j]).cost;
  }
  return total / static_cast<double>(pairs);
}

double eval_reconstruction(const vae::SetVae& model, const std::vector<PointSet>& sets,
                           std::uint64_t seed) {
  if (sets.empty()) throw ContractError("eval_reconstruction needs a nonempty dataset");
  Rng rng(seed);
  double total = 0.0;
  for (const auto& x : sets) {
    const auto out = model.forward(Tensor::from_matrix(x), rng, false);
    total += losses::w2_equal_value(x, out.x_hat.to_matrix());
  }
  return total / static_cast<double>(sets.size());
}

std::string metrics_json(const MetricMap& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j.dump(2);
}

std::string metrics_csv_header(const MetricMap& m) {
  std::string out;
  for (const auto& [k, v] : m) out += (out.empty() ? "" : ",") + k;
  return out;
}

std::string metrics_csv_row(const MetricMap& m) {
  std::string out;
  for (const auto& [k, v] : m) {
    if (!out.empty()) out += ',';
    out += nlohmann::json(v).dump();
  }
  return out;
}

}  // namespace setgen::metrics
