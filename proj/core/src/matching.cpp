#include "setgen/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "setgen/errors.hpp"

namespace setgen::matching {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Potentials {
  std::vector<double> row;
  std::vector<double> col;
  std::vector<std::size_t> column_of_row;
};

// Shortest augmenting path Hungarian method (1-based internal indexing).
Potentials solve_potentials(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Potentials p;
  p.row.assign(u.begin() + 1, u.end());
  p.col.assign(v.begin() + 1, v.end());
  p.column_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) p.column_of_row[match[j] - 1] = j - 1;
  return p;
}

// Kuhn's augmenting-path matching restricted to `allowed` edges, rows >= first_row
// and columns not in `taken`. Returns true if every such row can be matched.
bool has_perfect_matching(const std::vector<std::vector<std::size_t>>& allowed,
                          std::size_t first_row, const std::vector<bool>& taken) {
  const std::size_t n = allowed.size();
  std::vector<std::ptrdiff_t> row_of_col(n, -1);
  std::vector<std::size_t> stamp(n, 0);
  std::size_t epoch = 0;
  auto augment = [&](auto&& self, std::size_t r) -> bool {
    for (std::size_t c : allowed[r]) {
      if (taken[c] || stamp[c] == epoch) continue;
      stamp[c] = epoch;
      if (row_of_col[c] < 0 || self(self, static_cast<std::size_t>(row_of_col[c]))) {
        row_of_col[c] = static_cast<std::ptrdiff_t>(r);
        return true;
      }
    }
    return false;
  };
  for (std::size_t r = first_row; r < n; ++r) {
    ++epoch;
    if (!augment(augment, r)) return false;
  }
  return true;
}

double assignment_cost(const Matrix& a, const std::vector<std::size_t>& column_of_row) {
  double total = 0.0;
  for (std::size_t i = 0; i < column_of_row.size(); ++i) total += a(i, column_of_row[i]);
  return total;
}

}  // namespace

Assignment hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols()) {
    throw ShapeError("hungarian needs a square matrix, got " + std::to_string(cost.rows()) + "x" +
                     std::to_string(cost.cols()));
  }
  const std::size_t n = cost.rows();
  if (n == 0) return {};
  double scale = 1.0;
  for (double v : cost.values()) {
    if (!std::isfinite(v)) throw ContractError("hungarian: non-finite cost");
    scale = std::max(scale, std::abs(v));
  }
  const Potentials p = solve_potentials(cost);

  // Optimal assignments use only edges with zero reduced cost; pick the
  // lexicographically smallest perfect matching among them.
  const double tol = 1e-11 * scale * static_cast<double>(n);
  std::vector<std::vector<std::size_t>> tight(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (cost(i, j) - p.row[i] - p.col[j] <= tol) tight[i].push_back(j);

  Assignment result;
  result.column_of_row.assign(n, 0);
  std::vector<bool> taken(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    bool placed = false;
    for (std::size_t j : tight[i]) {
      if (taken[j]) continue;
      taken[j] = true;
      if (has_perfect_matching(tight, i + 1, taken)) {
        result.column_of_row[i] = j;
        placed = true;
        break;
      }
      taken[j] = false;
    }
    if (!placed) {
      // Tolerance too tight for this matrix; fall back to the solver's own answer.
      result.column_of_row = p.column_of_row;
      break;
    }
  }
  result.cost = assignment_cost(cost, result.column_of_row);
  return result;
}

Assignment brute_force_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw ShapeError("brute_force_assignment needs a square matrix");
  const std::size_t n = cost.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Assignment best{perm, assignment_cost(cost, perm)};
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double c = assignment_cost(cost, perm);
    if (c < best.cost) best = {perm, c};
  }
  return best;
}

namespace {

// Successive shortest paths with Johnson potentials on a dense bipartite
// transport network: source -> rows (capacity supply) -> columns -> sink.
class TransportFlow {
 public:
  TransportFlow(const Matrix& cost, std::int64_t supply, std::int64_t demand)
      : n_(cost.rows()), m_(cost.cols()), cost_(cost), supply_(supply), demand_(demand),
        flow_(n_ * m_, 0), row_left_(n_, supply), col_left_(m_, demand),
        row_pot_(n_, 0.0), col_pot_(m_, 0.0) {}

  void solve() {
    std::int64_t remaining = supply_ * static_cast<std::int64_t>(n_);
    while (remaining > 0) {
      remaining -= augment();
    }
  }

  std::int64_t flow(std::size_t i, std::size_t j) const { return flow_[i * m_ + j]; }

 private:
  // One Dijkstra over the residual graph. Node ids: rows [0, n), columns [n, n+m).
  // Sources are rows with leftover supply; targets are columns with leftover demand.
  std::int64_t augment() {
    const std::size_t total = n_ + m_;
    std::vector<double> dist(total, kInf);
    std::vector<std::ptrdiff_t> parent(total, -1);
    std::vector<bool> done(total, false);
    for (std::size_t i = 0; i < n_; ++i) {
      if (row_left_[i] > 0) dist[i] = 0.0;
    }
    auto potential = [&](std::size_t v) { return v < n_ ? row_pot_[v] : col_pot_[v - n_]; };
    for (;;) {
      std::size_t best = total;
      for (std::size_t v = 0; v < total; ++v)
        if (!done[v] && dist[v] < kInf && (best == total || dist[v] < dist[best])) best = v;
      if (best == total) break;
      done[best] = true;
      if (best < n_) {
        const std::size_t i = best;
        for (std::size_t j = 0; j < m_; ++j) {
          const std::size_t v = n_ + j;
          if (done[v]) continue;
          const double reduced = std::max(0.0, cost_(i, j) + potential(i) - potential(v));
          if (dist[i] + reduced < dist[v]) {
            dist[v] = dist[i] + reduced;
            parent[v] = static_cast<std::ptrdiff_t>(i);
          }
        }
      } else {
        const std::size_t j = best - n_;
        for (std::size_t i = 0; i < n_; ++i) {
          if (flow_[i * m_ + j] <= 0 || done[i]) continue;
          const double reduced = std::max(0.0, -cost_(i, j) + potential(best) - potential(i));
          if (dist[best] + reduced < dist[i]) {
            dist[i] = dist[best] + reduced;
            parent[i] = static_cast<std::ptrdiff_t>(best);
          }
        }
      }
    }
    std::size_t target = total;
    for (std::size_t j = 0; j < m_; ++j) {
      const std::size_t v = n_ + j;
      if (col_left_[j] > 0 && dist[v] < kInf && (target == total || dist[v] < dist[target])) {
        target = v;
      }
    }
    if (target == total) throw Error("transport: no augmenting path");

    for (std::size_t v = 0; v < total; ++v) {
      const double d = std::min(dist[v], dist[target]);
      if (v < n_) row_pot_[v] += d; else col_pot_[v - n_] += d;
    }

    // Bottleneck along the path.
    std::int64_t amount = col_left_[target - n_];
    std::size_t v = target;
    while (parent[v] >= 0) {
      const std::size_t u = static_cast<std::size_t>(parent[v]);
      if (u >= n_) amount = std::min(amount, flow_[v * m_ + (u - n_)]);
      v = u;
    }
    amount = std::min(amount, row_left_[v]);

    v = target;
    while (parent[v] >= 0) {
      const std::size_t u = static_cast<std::size_t>(parent[v]);
      if (u < n_) flow_[u * m_ + (v - n_)] += amount; else flow_[v * m_ + (u - n_)] -= amount;
      v = u;
    }
    row_left_[v] -= amount;
    col_left_[target - n_] -= amount;
    return amount;
  }

  std::size_t n_, m_;
  const Matrix& cost_;
  std::int64_t supply_, demand_;
  std::vector<std::int64_t> flow_;
  std::vector<std::int64_t> row_left_, col_left_;
  std::vector<double> row_pot_, col_pot_;
};

}  // namespace

TransportPlan transport_uniform(const Matrix& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  if (n == 0 || m == 0) throw ContractError("transport between empty sets");
  for (double v : cost.values()) {
    if (!std::isfinite(v)) throw ContractError("transport: non-finite cost");
  }
  // Shift so every arc cost is nonnegative; the optimum is unchanged because
  // every feasible plan carries the same total mass.
  const double lowest = *std::min_element(cost.values().begin(), cost.values().end());
  Matrix shifted = cost;
  if (lowest < 0.0) {
    for (double& v : shifted.values()) v -= lowest;
  }
  TransportFlow flow(shifted, static_cast<std::int64_t>(m), static_cast<std::int64_t>(n));
  flow.solve();

  TransportPlan plan{Matrix(n, m), 0.0};
  const double mass = 1.0 / static_cast<double>(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const std::int64_t f = flow.flow(i, j);
      if (f == 0) continue;
      plan.coupling(i, j) = static_cast<double>(f) * mass;
      plan.cost += static_cast<double>(f) * cost(i, j);
    }
  plan.cost *= mass;
  return plan;
}

Matrix squared_distances(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) throw ShapeError("point dimension mismatch");
  Matrix d(x.rows(), y.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < y.rows(); ++j) d(i, j) = squared_distance(x.row(i), y.row(j));
  return d;
}

TransportPlan ot_uniform(const Matrix& x, const Matrix& y) {
  return transport_uniform(squared_distances(x, y));
}

}  // namespace setgen::matching
