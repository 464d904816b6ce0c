#pragma once

#include <cstddef>
#include <vector>

#include "setgen/matrix.hpp"

namespace setgen::matching {

struct Assignment {
  std::vector<std::size_t> column_of_row;  // bijection on [0, n)
  double cost = 0.0;
};

// Exact minimum-cost assignment for a square cost matrix (Kuhn-Munkres with
// potentials, O(n^3)). Among optimal assignments the lexicographically
// smallest `column_of_row` is returned, so ties resolve deterministically.
Assignment hungarian(const Matrix& cost);

// Exhaustive search over all n! permutations; test oracle for small n.
Assignment brute_force_assignment(const Matrix& cost);

struct TransportPlan {
  Matrix coupling;  // n x m, rows sum to 1/n, columns to 1/m
  double cost = 0.0;
};

// Exact optimal transport between uniform measures on the rows and columns of
// `cost`. Solved as an integral min-cost flow with m units leaving each row
// node and n units entering each column node, then rescaled by 1/(n m).
TransportPlan transport_uniform(const Matrix& cost);

Matrix squared_distances(const Matrix& x, const Matrix& y);

// Squared-cost optimal transport between two point sets of any sizes.
TransportPlan ot_uniform(const Matrix& x, const Matrix& y);

}  // namespace setgen::matching
