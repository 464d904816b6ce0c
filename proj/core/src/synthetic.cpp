#include "setgen/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "setgen/errors.hpp"

namespace setgen::synth {

using nlohmann::json;

void SynthConfig::validate() const {
  if (!(box_max > box_min)) throw ContractError("synthetic config: empty bounding box");
  if (!(min_distance > 0.0 && min_distance < neighbor_distance)) {
    throw ContractError("synthetic config: need 0 < min_distance < neighbor_distance");
  }
  if (size_min < 2 || size_min > size_max) {
    throw ContractError("synthetic config: need 2 <= size_min <= size_max");
  }
  if (max_neighbors < 1) throw ContractError("synthetic config: max_neighbors must be >= 1");
  if (!(size_mean > 0.0)) throw ContractError("synthetic config: size_mean must be positive");
  if (attempts == 0 || max_restarts == 0) throw ContractError("synthetic config: zero attempt budget");
}

SynthConfig SynthConfig::extrapolation() const {
  SynthConfig out = *this;
  out.size_mean += 10.0;
  out.size_max = 45;
  return out;
}

std::map<std::size_t, double> SetDataset::size_histogram() const {
  std::map<std::size_t, double> hist;
  if (sets.empty()) return hist;
  for (const auto& s : sets) hist[s.rows()] += 1.0;
  for (auto& [n, p] : hist) p /= static_cast<double>(sets.size());
  return hist;
}

double SetDataset::mean_size() const {
  if (sets.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : sets) total += static_cast<double>(s.rows());
  return total / static_cast<double>(sets.size());
}

std::size_t SetDataset::max_size() const {
  std::size_t m = 0;
  for (const auto& s : sets) m = std::max(m, s.rows());
  return m;
}

std::vector<std::size_t> Adjacency::degrees() const {
  std::vector<std::size_t> deg(n_, 0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) deg[i] += (*this)(i, j);
  return deg;
}

std::size_t Adjacency::edge_count() const {
  const auto deg = degrees();
  return std::accumulate(deg.begin(), deg.end(), std::size_t{0}) / 2;
}

bool Adjacency::connected() const {
  if (n_ <= 1) return true;
  std::vector<bool> seen(n_, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < n_; ++j) {
      if ((*this)(i, j) && !seen[j]) {
        seen[j] = true;
        ++reached;
        stack.push_back(j);
      }
    }
  }
  return reached == n_;
}

Adjacency Adjacency::permuted(const std::vector<std::size_t>& order) const {
  Adjacency out(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if ((*this)(order[i], order[j])) out.bits_[i * n_ + j] = 1;
  return out;
}

std::size_t sample_size(const SynthConfig& cfg, Rng& rng) {
  for (;;) {
    const auto n = static_cast<std::size_t>(rng.poisson(cfg.size_mean));
    if (n >= cfg.size_min && n <= cfg.size_max) return n;
  }
}

PointSet sample_set_of_size(const SynthConfig& cfg, std::size_t size, Rng& rng) {
  cfg.validate();
  const double min_sq = cfg.min_distance * cfg.min_distance;
  const double nb_sq = cfg.neighbor_distance * cfg.neighbor_distance;
  for (std::size_t restart = 0; restart < cfg.max_restarts; ++restart) {
    PointSet points(size, kPointDim);
    std::vector<std::size_t> degree(size, 0);
    std::size_t accepted = 0;
    std::vector<std::size_t> neighbors;
    for (std::size_t attempt = 0; attempt < cfg.attempts && accepted < size; ++attempt) {
      double proposal[kPointDim];
      for (double& v : proposal) v = rng.uniform(cfg.box_min, cfg.box_max);
      const std::span<const double> p(proposal, kPointDim);

      neighbors.clear();
      bool ok = true;
      for (std::size_t j = 0; j < accepted && ok; ++j) {
        const double d = squared_distance(p, points.row(j));
        if (d <= min_sq) ok = false;
        else if (d <= nb_sq) neighbors.push_back(j);
      }
      if (!ok) continue;
      if (accepted > 0 && neighbors.empty()) continue;
      if (neighbors.size() > cfg.max_neighbors) continue;
      bool saturated = false;
      for (std::size_t j : neighbors) saturated = saturated || degree[j] + 1 > cfg.max_neighbors;
      if (saturated) continue;

      std::copy(p.begin(), p.end(), points.row(accepted).begin());
      degree[accepted] = neighbors.size();
      for (std::size_t j : neighbors) ++degree[j];
      ++accepted;
    }
    if (accepted == size) return points;
  }
  throw GenerationError("rejection sampling failed for a set of " + std::to_string(size) +
                        " points after " + std::to_string(cfg.max_restarts) + " restarts");
}

PointSet sample_set(const SynthConfig& cfg, Rng& rng) {
  const std::size_t size = sample_size(cfg, rng);
  return sample_set_of_size(cfg, size, rng);
}

SetDataset gen_dataset(const SynthConfig& cfg, std::size_t count, std::uint64_t seed) {
  cfg.validate();
  if (count < 1) throw ContractError("gen_dataset: count must be >= 1");
  const Rng root(seed);
  SetDataset data;
  data.sets.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng = root.split(k);
    data.sets.push_back(sample_set(cfg, rng));
  }
  return data;
}

Adjacency derive_graph(const PointSet& x, double neighbor_distance) {
  const std::size_t n = x.rows();
  const double nb_sq = neighbor_distance * neighbor_distance;
  Adjacency adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (squared_distance(x.row(i), x.row(j)) <= nb_sq) adj.connect(i, j);
  return adj;
}

std::vector<std::size_t> valency_of(const PointSet& x, double neighbor_distance) {
  return derive_graph(x, neighbor_distance).degrees();
}

std::vector<std::string> constraint_violations(const PointSet& x, const SynthConfig& cfg) {
  std::vector<std::string> problems;
  const std::size_t n = x.rows();
  if (x.cols() != kPointDim) problems.push_back("points are not 3-dimensional");
  if (n < cfg.size_min || n > cfg.size_max) {
    problems.push_back("size " + std::to_string(n) + " outside the configured support");
  }
  if (!problems.empty() && x.cols() != kPointDim) return problems;
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : x.row(i)) {
      if (v < cfg.box_min || v > cfg.box_max) {
        problems.push_back("point " + std::to_string(i) + " outside the bounding box");
        break;
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::sqrt(squared_distance(x.row(i), x.row(j))) <= cfg.min_distance) {
        problems.push_back("points " + std::to_string(i) + " and " + std::to_string(j) +
                           " closer than min_distance");
      }
    }
  }
  const Adjacency adj = derive_graph(x, cfg.neighbor_distance);
  const auto deg = adj.degrees();
  for (std::size_t i = 0; i < n; ++i) {
    if (n >= 2 && deg[i] == 0) problems.push_back("point " + std::to_string(i) + " has no neighbour");
    if (deg[i] > cfg.max_neighbors) {
      problems.push_back("point " + std::to_string(i) + " has valency " + std::to_string(deg[i]));
    }
  }
  if (!adj.connected()) problems.push_back("graph is not connected");
  return problems;
}

void write_dataset(const std::string& path, const SetDataset& data,
                   const std::optional<std::string>& header_json) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& set : data.sets) {
    json points = json::array();
    for (std::size_t i = 0; i < set.rows(); ++i) {
      const auto row = set.row(i);
      points.push_back(json(std::vector<double>(row.begin(), row.end())));
    }
    out << json{{"points", std::move(points)}}.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
  if (header_json) {
    std::ofstream header(path + ".header.json", std::ios::binary | std::ios::trunc);
    if (!header) throw IoError("cannot open " + path + ".header.json for writing");
    header << *header_json << '\n';
  }
}

SetDataset read_dataset(const std::string& path, const SynthConfig* validate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  SetDataset data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IoError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!record.is_object() || !record.contains("points") || !record["points"].is_array()) {
      throw IoError("expected an object with a \"points\" array", line_no);
    }
    const auto& rows = record["points"];
    if (rows.empty()) throw IoError("empty point set", line_no);
    const std::size_t d = rows[0].is_array() ? rows[0].size() : 0;
    if (d == 0) throw IoError("points must be non-empty arrays", line_no);
    PointSet set(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array() || rows[i].size() != d) throw IoError("ragged point list", line_no);
      for (std::size_t k = 0; k < d; ++k) {
        if (!rows[i][k].is_number()) throw IoError("non-numeric coordinate", line_no);
        set(i, k) = rows[i][k].get<double>();
      }
    }
    if (validate) {
      const auto problems = constraint_violations(set, *validate);
      if (!problems.empty()) throw IoError("constraint violation: " + problems.front(), line_no);
    }
    data.sets.push_back(std::move(set));
  }
  if (data.sets.empty()) throw IoError(path + " contains no point sets");
  return data;
}

std::string config_to_json(const SynthConfig& cfg) {
  json j{{"box_min", cfg.box_min},
         {"box_max", cfg.box_max},
         {"min_distance", cfg.min_distance},
         {"neighbor_distance", cfg.neighbor_distance},
         {"max_neighbors", cfg.max_neighbors},
         {"size_mean", cfg.size_mean},
         {"size_min", cfg.size_min},
         {"size_max", cfg.size_max},
         {"attempts", cfg.attempts},
         {"max_restarts", cfg.max_restarts}};
  return j.dump(2);
}

}  // namespace setgen::synth
