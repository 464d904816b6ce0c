#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "setgen/rng.hpp"
#include "setgen/tensor.hpp"

namespace setgen::nn {

struct NamedParam {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedParam>;

void zero_grads(ParamList& params);

// Uniform in +-sqrt(6 / (fan_in + fan_out)), trainable.
Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out

  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  std::size_t in() const { return weight.rows(); }
  std::size_t out() const { return weight.cols(); }
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;
};

// Affine layers with ReLU in between; no activation after the last layer.
struct Mlp {
  std::vector<Linear> layers;

  static Mlp init(std::span<const std::size_t> dims, Rng& rng);
  static Mlp init(std::initializer_list<std::size_t> dims, Rng& rng) {
    return init(std::span<const std::size_t>(dims.begin(), dims.size()), rng);
  }
  std::size_t in() const { return layers.front().in(); }
  std::size_t out() const { return layers.back().out(); }
  void collect(ParamList& out, const std::string& prefix) const;
};

Tensor mlp_forward(const Mlp& mlp, const Tensor& x);

// Feature-wise modulation x * (cond W_m + b_m) + (cond W_b + b_b), with the
// conditioning row broadcast over the rows of x. The scale bias starts at 1
// so a fresh layer is close to the identity in x.
struct Film {
  Linear scale;
  Linear shift;

  static Film init(std::size_t cond_dim, std::size_t width, Rng& rng);
  std::size_t cond_dim() const { return scale.in(); }
  std::size_t width() const { return scale.out(); }
  void collect(ParamList& out, const std::string& prefix) const;
};

Tensor film(const Film& p, const Tensor& x, const Tensor& cond);

struct LayerNorm {
  Tensor gain;  // 1 x c
  Tensor bias;  // 1 x c
  double eps = 1e-5;

  static LayerNorm init(std::size_t width);
  void collect(ParamList& out, const std::string& prefix) const;
};

// Normalizes every row over the channel axis.
Tensor layer_norm(const LayerNorm& p, const Tensor& x);

struct TransformerParams {
  std::size_t heads = 4;
  LayerNorm norm_attention;
  Linear query;
  Linear key;
  Linear value;
  Linear output;
  LayerNorm norm_feed_forward;
  Mlp feed_forward;  // c -> 4c -> c

  static TransformerParams init(std::size_t width, std::size_t heads, Rng& rng);
  std::size_t width() const { return query.in(); }
  void collect(ParamList& out, const std::string& prefix) const;
};

// Pre-norm block: X + MHA(LN(X)), then X + FF(LN(X)). No masking and no
// positional information, so the block is permutation equivariant.
Tensor transformer_block(const TransformerParams& p, const Tensor& x);

// [sum, mean, max, std] over rows, per channel: n x c -> 1 x 4c.
// std is the population standard deviation.
Tensor pna_pool(const Tensor& x);

}  // namespace setgen::nn
