#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "setgen/tensor.hpp"

// Differentiable primitives. Elementwise binary ops broadcast right-aligned
// shapes (each axis equal or 1). Reductions over rows/columns keep the
// reduced axis with extent 1. Max/min subgradients split equally among ties.
namespace setgen::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor broadcast_to(const Tensor& x, const Shape& shape);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, const Shape& shape);

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor neg(const Tensor& x);
// Gradient passes only strictly inside [lo, hi].
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor softmax_lastdim(const Tensor& x);
Tensor log_softmax_lastdim(const Tensor& x);

// Full reductions to a scalar.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Rank-2 reductions: *_rows reduce over rows (result 1 x c),
// *_cols reduce over columns (result n x 1).
Tensor sum_rows(const Tensor& x);
Tensor sum_cols(const Tensor& x);
Tensor mean_rows(const Tensor& x);
Tensor mean_cols(const Tensor& x);
Tensor max_rows(const Tensor& x);
Tensor min_rows(const Tensor& x);
Tensor max_cols(const Tensor& x);
Tensor min_cols(const Tensor& x);
// Population standard deviation over rows; zero gradient where it is 0.
Tensor std_rows(const Tensor& x);

// Squared Euclidean distances between rows of x (n x d) and y (m x d).
Tensor pairwise_sqdist(const Tensor& x, const Tensor& y);
// Euclidean distances between rows of x; gradient is 0 on coincident pairs.
Tensor pairwise_dist(const Tensor& x);

}  // namespace setgen::ops
