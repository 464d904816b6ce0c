#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "setgen/nn.hpp"
#include "setgen/rng.hpp"
#include "setgen/tensor.hpp"

// Creation functions: latent vector z (1 x l) and a target size n to an
// initial n x c set.
namespace setgen::creation {

struct CreationOutput {
  Tensor points;                      // n x c
  std::vector<std::size_t> selected;  // reference rows used (Top-n, First-n)
};

// X * (z W3 + b3) + (z W4 + b4), row-broadcast. Same result as concatenating
// z to every row and applying a linear layer, at O(nc + cl) instead of
// O(n(c + l)c).
Tensor condition_latent(const Tensor& x, const Tensor& z, const nn::Film& conditioning);

// Trainable reference set: representations (n0 x c) and angles (n0 x a).
struct ReferenceSet {
  Tensor representations;
  Tensor angles;

  static ReferenceSet init(std::size_t size, std::size_t width, std::size_t angle_dim, Rng& rng);
  std::size_t size() const { return representations.rows(); }
  // Rescales any angle row whose norm fell below `floor` back onto it.
  void project_angles(double floor = 1e-8);
};

struct TopnParams {
  nn::Mlp angle_mlp;  // l -> a
  Tensor w1;          // 1 x c, multiplicative modulation
  Tensor w2;          // 1 x c, additive modulation
  nn::Film conditioning;
  ReferenceSet reference;

  static TopnParams init(std::size_t latent_dim, std::size_t width, std::size_t angle_dim,
                         std::size_t reference_size, Rng& rng);
  std::size_t capacity() const { return reference.size(); }
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

// Indices of the n largest scores in descending order; equal scores keep
// ascending index order.
std::vector<std::size_t> top_indices(std::span<const double> scores, std::size_t n);

// theta_i . a / |theta_i| for every reference row (n0 x 1).
Tensor angle_scores(const Tensor& angles, const Tensor& direction);

CreationOutput create_topn(const TopnParams& p, const Tensor& z, std::size_t n);

struct FirstnParams {
  Tensor reference;  // n_max x c
  nn::Film conditioning;

  static FirstnParams init(std::size_t latent_dim, std::size_t width, std::size_t max_size,
                           Rng& rng);
  std::size_t capacity() const { return reference.rows(); }
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

CreationOutput create_firstn(const FirstnParams& p, const Tensor& z, std::size_t n);

struct IidParams {
  nn::Linear lift;  // d_low -> c
  nn::Film conditioning;

  static IidParams init(std::size_t latent_dim, std::size_t width, std::size_t low_dim, Rng& rng);
  std::size_t low_dim() const { return lift.in(); }
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

CreationOutput create_iid(const IidParams& p, const Tensor& z, std::size_t n, Rng& rng);

struct MlpCreatorParams {
  nn::Mlp mlp;  // l -> n_max * c
  std::size_t max_size = 0;
  std::size_t width = 0;

  static MlpCreatorParams init(std::size_t latent_dim, std::size_t width, std::size_t max_size,
                               Rng& rng);
  std::size_t capacity() const { return max_size; }
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

// Reshapes the MLP output row-major to n_max x c and keeps the first n rows.
CreationOutput create_mlp(const MlpCreatorParams& p, const Tensor& z, std::size_t n);

}  // namespace setgen::creation
