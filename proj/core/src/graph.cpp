#include "setgen/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "setgen/errors.hpp"
#include "setgen/ops.hpp"

namespace setgen::graph {

void GraphSample::validate() const {
  if (adjacency.size() != types.size()) {
    throw ShapeError("graph has " + std::to_string(types.size()) + " types but adjacency of size " +
                     std::to_string(adjacency.size()));
  }
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (adjacency(i, i)) throw ShapeError("graph adjacency has a self loop");
  }
}

GraphSample GraphSample::permuted(const std::vector<std::size_t>& order) const {
  GraphSample out;
  out.types.reserve(order.size());
  for (std::size_t i : order) out.types.push_back(types.at(i));
  out.adjacency = adjacency.permuted(order);
  return out;
}

GraphSample graph_from_points(const PointSet& x, double neighbor_distance) {
  GraphSample g;
  g.adjacency = synth::derive_graph(x, neighbor_distance);
  for (std::size_t d : g.adjacency.degrees()) g.types.push_back(static_cast<int>(d));
  return g;
}

GraphPrediction permute_prediction(const GraphPrediction& p, const std::vector<std::size_t>& order) {
  const Tensor rows = ops::gather_rows(p.edge_logits, order);
  const Tensor both = ops::transpose(ops::gather_rows(ops::transpose(rows), order));
  return {ops::gather_rows(p.node_logits, order), both};
}

GraphHead GraphHead::init(std::size_t width, std::size_t k_max, Rng& rng) {
  GraphHead h;
  h.node = nn::Mlp::init({width, width, k_max}, rng);
  h.edge = nn::Mlp::init({2 * width, width, 1}, rng);
  return h;
}

void GraphHead::collect(nn::ParamList& out, const std::string& prefix) const {
  node.collect(out, prefix + ".node");
  edge.collect(out, prefix + ".edge");
}

Tensor edge_logits(const nn::Mlp& pair_mlp, const Tensor& h) {
  if (h.rank() != 2 || h.rows() == 0 || 2 * h.cols() != pair_mlp.in() || pair_mlp.out() != 1) {
    throw ShapeError("edge_logits: embeddings " + shape_string(h.shape()) +
                     " do not fit a pair MLP with input " + std::to_string(pair_mlp.in()));
  }
  const std::size_t n = h.rows();
  std::vector<std::size_t> left(n * n), right(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      left[i * n + j] = i;
      right[i * n + j] = j;
    }
  }
  const std::array<Tensor, 2> parts{ops::gather_rows(h, left), ops::gather_rows(h, right)};
  const Tensor m = ops::reshape(nn::mlp_forward(pair_mlp, ops::concat_cols(parts)), {n, n});
  return ops::scale(ops::add(m, ops::transpose(m)), 0.5);
}

GraphPrediction predict_graph(const GraphHead& head, const Tensor& h) {
  return {nn::mlp_forward(head.node, h), edge_logits(head.edge, h)};
}

namespace {

std::vector<int> argmax_types(const Tensor& logits) {
  std::vector<int> types(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.cols(); ++k)
      if (logits.at(i, k) > logits.at(i, best)) best = k;
    types[i] = static_cast<int>(best) + 1;
  }
  return types;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Tensor one_hot_types(const std::vector<int>& types, std::size_t k_max) {
  Tensor t = Tensor::zeros({types.size(), k_max});
  auto data = t.mutable_data();
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (types[i] < 1 || static_cast<std::size_t>(types[i]) > k_max) {
      throw ContractError("node type " + std::to_string(types[i]) + " outside [1, " +
                          std::to_string(k_max) + "]");
    }
    data[i * k_max + static_cast<std::size_t>(types[i] - 1)] = 1.0;
  }
  return t;
}

std::vector<double> histogram(const std::vector<int>& types, std::size_t k_max) {
  std::vector<double> h(k_max, 0.0);
  if (types.empty()) return h;
  for (int t : types) {
    if (t >= 1 && static_cast<std::size_t>(t) <= k_max) h[static_cast<std::size_t>(t - 1)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(types.size());
  return h;
}

double edge_fraction(const Adjacency& a) {
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  return static_cast<double>(a.edge_count()) / (0.5 * static_cast<double>(n * (n - 1)));
}

double mean_of(const std::vector<std::size_t>& v) {
  if (v.empty()) return 0.0;
  return static_cast<double>(std::accumulate(v.begin(), v.end(), std::size_t{0})) /
         static_cast<double>(v.size());
}

}  // namespace

GraphSample hard_graph(const GraphPrediction& p) {
  GraphSample g;
  g.types = argmax_types(p.node_logits);
  const std::size_t n = p.size();
  g.adjacency = Adjacency(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (p.edge_logits.at(i, j) > 0.0) g.adjacency.connect(i, j);
  return g;
}

GraphSample sample_graph(const GraphPrediction& p, Rng& rng) {
  GraphSample g;
  g.types = argmax_types(p.node_logits);
  const std::size_t n = p.size();
  g.adjacency = Adjacency(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < sigmoid(p.edge_logits.at(i, j))) g.adjacency.connect(i, j);
  return g;
}

std::vector<double> node_scores(const std::vector<int>& types, const Adjacency& adj) {
  if (types.size() != adj.size()) throw ShapeError("node_scores: types and adjacency sizes differ");
  const std::size_t n = types.size();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double neighbours = 0.0;
    std::size_t degree = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && adj(i, j)) {
        ++degree;
        neighbours += 1.0 * types[j];
      }
    }
    s[i] = 1e5 * types[i] + 1e4 * static_cast<double>(degree) + neighbours;
  }
  return s;
}

std::vector<std::size_t> score_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

Alignment align_heuristic(const GraphSample& target, const std::vector<int>& predicted_types,
                          const Adjacency& predicted_adjacency) {
  if (target.size() != predicted_types.size() || predicted_types.size() != predicted_adjacency.size()) {
    throw ContractError("align_heuristic: graphs have different node counts (" +
                        std::to_string(target.size()) + " vs " +
                        std::to_string(predicted_types.size()) + ")");
  }
  const auto ts = node_scores(target.types, target.adjacency);
  const auto ps = node_scores(predicted_types, predicted_adjacency);
  Alignment a{score_order(ts), score_order(ps), 0};
  for (std::size_t k = 1; k < a.target_order.size(); ++k) {
    if (ts[a.target_order[k]] == ts[a.target_order[k - 1]]) ++a.collisions;
    if (ps[a.predicted_order[k]] == ps[a.predicted_order[k - 1]]) ++a.collisions;
  }
  return a;
}

Tensor graph_ce_loss(const GraphSample& target, const GraphPrediction& prediction) {
  const std::size_t n = target.size();
  if (prediction.node_logits.rows() != n || prediction.edge_logits.rows() != n ||
      prediction.edge_logits.cols() != n) {
    throw ContractError("graph_ce_loss: target has " + std::to_string(n) +
                        " nodes, prediction has " + std::to_string(prediction.size()));
  }
  target.validate();
  const std::size_t k = prediction.node_logits.cols();
  const Tensor log_p = ops::log_softmax_lastdim(prediction.node_logits);
  Tensor loss = ops::scale(ops::sum(ops::mul(log_p, one_hot_types(target.types, k))),
                           -1.0 / static_cast<double>(n));
  if (n < 2) return loss;
  // softplus(l) - y l over i < j
  Tensor mask = Tensor::zeros({n, n});
  Tensor labels = Tensor::zeros({n, n});
  auto md = mask.mutable_data();
  auto ld = labels.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      md[i * n + j] = 1.0;
      ld[i * n + j] = target.adjacency(i, j) ? 1.0 : 0.0;
    }
  }
  const Tensor& l = prediction.edge_logits;
  const Tensor bce = ops::mul(ops::sub(ops::softplus(l), ops::mul(labels, l)), mask);
  const double pairs = 0.5 * static_cast<double>(n * (n - 1));
  return ops::add(loss, ops::scale(ops::sum(bce), 1.0 / pairs));
}

GraphRegBreakdown graph_reg_losses(const GraphSample& target, const GraphSample& predicted,
                                   std::size_t k_max) {
  target.validate();
  predicted.validate();
  GraphRegBreakdown r;
  const auto ht = histogram(target.types, k_max);
  const auto hp = histogram(predicted.types, k_max);
  for (std::size_t k = 0; k < k_max; ++k) r.histogram += (ht[k] - hp[k]) * (ht[k] - hp[k]);
  r.histogram /= static_cast<double>(k_max);
  const auto dt = target.adjacency.degrees();
  const auto dp = predicted.adjacency.degrees();
  const double md = mean_of(dt) - mean_of(dp);
  r.mean_degree = md * md;
  const double fe = edge_fraction(target.adjacency) - edge_fraction(predicted.adjacency);
  r.edge_type = fe * fe;  // both entries of (absent, single) differ by fe
  if (dt.size() == dp.size() && !dt.empty()) {
    for (std::size_t i = 0; i < dt.size(); ++i) {
      const double d = static_cast<double>(dt[i]) - static_cast<double>(dp[i]);
      r.valency += d * d;
    }
    r.valency /= static_cast<double>(dt.size());
  }
  r.total = r.histogram + r.mean_degree + r.edge_type + r.valency;
  return r;
}

Tensor graph_reg_losses_soft(const GraphSample& target, const GraphPrediction& prediction) {
  const std::size_t n = target.size();
  if (prediction.size() != n) throw ContractError("graph_reg_losses_soft: node counts differ");
  target.validate();
  const std::size_t k = prediction.node_logits.cols();
  const auto ht = histogram(target.types, k);
  const Tensor hp = ops::mean_rows(ops::softmax_lastdim(prediction.node_logits));
  Tensor total = ops::mean(ops::square(ops::sub(hp, Tensor::from_values({1, k}, ht))));

  Tensor off = Tensor::full({n, n}, 1.0);
  auto od = off.mutable_data();
  for (std::size_t i = 0; i < n; ++i) od[i * n + i] = 0.0;
  const Tensor prob = ops::mul(ops::sigmoid(prediction.edge_logits), off);
  const Tensor deg = ops::sum_cols(prob);  // n x 1
  const auto dt = target.adjacency.degrees();
  std::vector<double> dtv(dt.begin(), dt.end());
  const Tensor target_deg = Tensor::from_values({n, 1}, dtv);

  const Tensor mean_gap = ops::add_scalar(ops::mean(deg), -mean_of(dt));
  total = ops::add(total, ops::square(mean_gap));
  if (n >= 2) {
    const double pairs = static_cast<double>(n * (n - 1));  // ordered pairs
    const Tensor frac_gap = ops::add_scalar(ops::scale(ops::sum(prob), 1.0 / pairs),
                                            -edge_fraction(target.adjacency));
    total = ops::add(total, ops::square(frac_gap));
  }
  return ops::add(total, ops::mean(ops::square(ops::sub(deg, target_deg))));
}

bool is_valid(const GraphSample& g, std::size_t k_max) {
  if (g.size() == 0 || g.adjacency.size() != g.size()) return false;
  for (std::size_t d : g.adjacency.degrees())
    if (d < 1 || d > k_max) return false;
  return g.adjacency.connected();
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

std::uint64_t wl_hash(const GraphSample& g, std::size_t rounds) {
  const std::size_t n = g.size();
  std::vector<std::uint64_t> labels(n);
  for (std::size_t i = 0; i < n; ++i)
    labels[i] = fnv_mix(kFnvOffset, static_cast<std::uint64_t>(g.types[i]));
  std::uint64_t h = fnv_mix(kFnvOffset, n);
  auto absorb_multiset = [&](std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    for (auto x : v) h = fnv_mix(h, x);
  };
  absorb_multiset(labels);
  for (std::size_t r = 0; r < rounds; ++r) {
    std::vector<std::uint64_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint64_t> nbr;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && g.adjacency(i, j)) nbr.push_back(labels[j]);
      std::sort(nbr.begin(), nbr.end());
      std::uint64_t l = fnv_mix(kFnvOffset, labels[i]);
      for (auto x : nbr) l = fnv_mix(l, x);
      next[i] = l;
    }
    labels = std::move(next);
    absorb_multiset(labels);
  }
  return h;
}

ValidityReport validity_and_uniqueness(const std::vector<GraphSample>& graphs, std::size_t k_max) {
  ValidityReport r;
  r.total = graphs.size();
  std::unordered_set<std::uint64_t> seen;
  for (const auto& g : graphs) {
    if (!is_valid(g, k_max)) continue;
    ++r.valid;
    if (seen.insert(wl_hash(g)).second) ++r.unique_valid;
  }
  if (r.total > 0) {
    r.valid_pct = 100.0 * static_cast<double>(r.valid) / static_cast<double>(r.total);
    r.unique_valid_pct = 100.0 * static_cast<double>(r.unique_valid) / static_cast<double>(r.total);
  }
  return r;
}

std::string to_json(const GraphSample& g) {
  nlohmann::json j;
  j["types"] = g.types;
  auto edges = nlohmann::json::array();
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t k = i + 1; k < g.size(); ++k)
      if (g.adjacency(i, k)) edges.push_back({i, k});
  j["edges"] = edges;
  return j.dump();
}

GraphSample graph_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    GraphSample g;
    g.types = j.at("types").get<std::vector<int>>();
    g.adjacency = Adjacency(g.types.size());
    for (const auto& e : j.at("edges")) {
      const auto a = e.at(0).get<std::size_t>();
      const auto b = e.at(1).get<std::size_t>();
      if (a >= g.size() || b >= g.size() || a == b) throw IoError("edge index out of range", 0);
      g.adjacency.connect(a, b);
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed graph JSON: ") + e.what(), 0);
  }
}

}  // namespace setgen::graph
