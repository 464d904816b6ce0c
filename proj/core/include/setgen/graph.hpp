#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "setgen/matrix.hpp"
#include "setgen/nn.hpp"
#include "setgen/rng.hpp"
#include "setgen/synthetic.hpp"
#include "setgen/tensor.hpp"

// Graphs over point sets: node types are valency classes 1..k_max and there is
// a single edge type.
namespace setgen::graph {

using synth::Adjacency;

struct GraphSample {
  std::vector<int> types;  // 1..k_max
  Adjacency adjacency;

  std::size_t size() const { return types.size(); }
  // ShapeError when the node count and adjacency disagree.
  void validate() const;
  GraphSample permuted(const std::vector<std::size_t>& order) const;
  friend bool operator==(const GraphSample&, const GraphSample&) = default;
};

// Node type = degree in the distance graph.
GraphSample graph_from_points(const PointSet& x, double neighbor_distance);

struct GraphPrediction {
  Tensor node_logits;  // n x k_max
  Tensor edge_logits;  // n x n, symmetric; diagonal ignored
  std::size_t size() const { return node_logits.rows(); }
};

GraphPrediction permute_prediction(const GraphPrediction& p, const std::vector<std::size_t>& order);

struct GraphHead {
  nn::Mlp node;  // c -> c -> k_max
  nn::Mlp edge;  // 2c -> c -> 1
  static GraphHead init(std::size_t width, std::size_t k_max, Rng& rng);
  std::size_t k_max() const { return node.out(); }
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

// logit(i, j) = (m(h_i, h_j) + m(h_j, h_i)) / 2.
Tensor edge_logits(const nn::Mlp& pair_mlp, const Tensor& h);
GraphPrediction predict_graph(const GraphHead& head, const Tensor& h);

// Argmax types and edges with positive logits.
GraphSample hard_graph(const GraphPrediction& p);
// Independent Bernoulli draw per edge; types by argmax.
GraphSample sample_graph(const GraphPrediction& p, Rng& rng);

// s(i) = 1e5 type(i) + 1e4 deg(i) + sum over neighbours of type(j).
std::vector<double> node_scores(const std::vector<int>& types, const Adjacency& adj);
// Indices sorted by descending score, ties by index.
std::vector<std::size_t> score_order(const std::vector<double>& scores);

struct Alignment {
  std::vector<std::size_t> target_order;
  std::vector<std::size_t> predicted_order;
  std::size_t collisions = 0;  // equal neighbouring scores after sorting, both graphs
};

Alignment align_heuristic(const GraphSample& target, const std::vector<int>& predicted_types,
                          const Adjacency& predicted_adjacency);

// Mean node-type cross entropy + mean BCE over the strict upper triangle.
Tensor graph_ce_loss(const GraphSample& target, const GraphPrediction& prediction);

struct GraphRegBreakdown {
  double histogram = 0.0;
  double mean_degree = 0.0;
  double edge_type = 0.0;
  double valency = 0.0;
  double total = 0.0;
};

GraphRegBreakdown graph_reg_losses(const GraphSample& target, const GraphSample& predicted,
                                   std::size_t k_max);
// Differentiable version using softmax types and sigmoid edges.
Tensor graph_reg_losses_soft(const GraphSample& target, const GraphPrediction& prediction);

bool is_valid(const GraphSample& g, std::size_t k_max);
// 3 rounds of Weisfeiler-Leman refinement, hashed with FNV-1a.
std::uint64_t wl_hash(const GraphSample& g, std::size_t rounds = 3);

struct ValidityReport {
  std::size_t total = 0;
  std::size_t valid = 0;
  std::size_t unique_valid = 0;
  double valid_pct = 0.0;
  double unique_valid_pct = 0.0;
};

ValidityReport validity_and_uniqueness(const std::vector<GraphSample>& graphs, std::size_t k_max);

std::string to_json(const GraphSample& g);
GraphSample graph_from_json(const std::string& text);

}  // namespace setgen::graph
