#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "setgen/matrix.hpp"
#include "setgen/rng.hpp"
#include "setgen/synthetic.hpp"
#include "setgen/vae.hpp"

namespace setgen::metrics {

// Squared 1-D W2 between the pooled per-point valencies of both collections,
// using the quantile coupling on a common grid of N*M quantiles.
double valency_w2(const std::vector<PointSet>& generated, const std::vector<PointSet>& reference,
                  double neighbor_distance);
double valency_w2(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

// Percentage of points whose valency falls outside [1, k_max].
double incorrect_valency_pct(const std::vector<PointSet>& generated, std::size_t k_max,
                             double neighbor_distance);

// Mean uniform-OT cost over `pairs` random pairs of distinct sets.
double diversity_score(const std::vector<PointSet>& sets, std::size_t pairs, Rng& rng);

inline constexpr std::uint64_t kEvalSeed = 0x5e76e7a1u;

// Mean w2_equal between every set and its reconstruction decoded from z = mu.
double eval_reconstruction(const vae::SetVae& model, const std::vector<PointSet>& sets,
                           std::uint64_t seed = kEvalSeed);

using MetricMap = std::map<std::string, double>;

std::string metrics_json(const MetricMap& m);
std::string metrics_csv_header(const MetricMap& m);
std::string metrics_csv_row(const MetricMap& m);

}  // namespace setgen::metrics
