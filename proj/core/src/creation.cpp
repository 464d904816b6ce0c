#include "setgen/creation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "setgen/errors.hpp"
#include "setgen/ops.hpp"

namespace setgen::creation {

namespace {

Tensor as_row(const Tensor& z) {
  if (z.rank() == 2 && z.rows() == 1) return z;
  if (z.rank() == 1) return ops::reshape(z, {1, z.numel()});
  throw ShapeError("latent vector must be (l) or (1, l), got " + shape_string(z.shape()));
}

void require_size(std::size_t n, std::size_t capacity) {
  if (n < 1) throw ContractError("creation needs n >= 1");
  if (n > capacity) throw CapacityError(n, capacity);
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

Tensor condition_latent(const Tensor& x, const Tensor& z, const nn::Film& conditioning) {
  return nn::film(conditioning, x, as_row(z));
}

ReferenceSet ReferenceSet::init(std::size_t size, std::size_t width, std::size_t angle_dim,
                                Rng& rng) {
  if (size == 0 || angle_dim == 0) throw ContractError("reference set needs n0 >= 1 and a >= 1");
  std::vector<double> reps(size * width);
  for (double& v : reps) v = 0.1 * rng.normal();
  std::vector<double> angles(size * angle_dim);
  for (std::size_t i = 0; i < size; ++i) {
    double norm = 0.0;
    for (std::size_t k = 0; k < angle_dim; ++k) {
      const double v = rng.normal();
      angles[i * angle_dim + k] = v;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      angles[i * angle_dim] = 1.0;
      norm = 1.0;
    }
    for (std::size_t k = 0; k < angle_dim; ++k) angles[i * angle_dim + k] /= norm;
  }
  return {Tensor::from_values({size, width}, std::move(reps), true),
          Tensor::from_values({size, angle_dim}, std::move(angles), true)};
}

void ReferenceSet::project_angles(double floor) {
  auto values = angles.mutable_data();
  const std::size_t a = angles.cols();
  for (std::size_t i = 0; i < angles.rows(); ++i) {
    auto row = values.subspan(i * a, a);
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    if (norm >= floor) continue;
    if (norm == 0.0) {
      row[0] = floor;
    } else {
      for (double& v : row) v *= floor / norm;
    }
  }
}

TopnParams TopnParams::init(std::size_t latent_dim, std::size_t width, std::size_t angle_dim,
                            std::size_t reference_size, Rng& rng) {
  TopnParams p;
  p.angle_mlp = nn::Mlp::init({latent_dim, width, angle_dim}, rng);
  p.w1 = nn::xavier_uniform(1, width, rng);
  p.w2 = nn::xavier_uniform(1, width, rng);
  p.conditioning = nn::Film::init(latent_dim, width, rng);
  p.reference = ReferenceSet::init(reference_size, width, angle_dim, rng);
  return p;
}

void TopnParams::collect(nn::ParamList& out, const std::string& prefix) const {
  angle_mlp.collect(out, prefix + ".angle_mlp");
  out.push_back({prefix + ".w1", w1});
  out.push_back({prefix + ".w2", w2});
  conditioning.collect(out, prefix + ".film");
  out.push_back({prefix + ".reference.representations", reference.representations});
  out.push_back({prefix + ".reference.angles", reference.angles});
}

std::vector<std::size_t> top_indices(std::span<const double> scores, std::size_t n) {
  if (n > scores.size()) throw CapacityError(n, scores.size());
  std::vector<std::size_t> idx = iota(scores.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  idx.resize(n);
  return idx;
}

Tensor angle_scores(const Tensor& angles, const Tensor& direction) {
  const Tensor dots = ops::matmul(angles, ops::transpose(direction));
  const Tensor norms = ops::sqrt(ops::sum_cols(ops::square(angles)));
  return ops::div(dots, norms);
}

CreationOutput create_topn(const TopnParams& p, const Tensor& z, std::size_t n) {
  require_size(n, p.capacity());
  const Tensor latent = as_row(z);
  const Tensor direction = nn::mlp_forward(p.angle_mlp, latent);
  const Tensor scores = angle_scores(p.reference.angles, direction);
  std::vector<std::size_t> selected = top_indices(scores.data(), n);

  const Tensor picked = ops::gather_rows(scores, selected);
  const Tensor weights = ops::transpose(ops::softmax_lastdim(ops::transpose(picked)));
  const Tensor reps = ops::gather_rows(p.reference.representations, selected);
  const Tensor modulated =
      ops::add(ops::mul(reps, ops::matmul(weights, p.w1)), ops::matmul(weights, p.w2));
  return {condition_latent(modulated, latent, p.conditioning), std::move(selected)};
}

FirstnParams FirstnParams::init(std::size_t latent_dim, std::size_t width, std::size_t max_size,
                                Rng& rng) {
  std::vector<double> reps(max_size * width);
  for (double& v : reps) v = 0.1 * rng.normal();
  return {Tensor::from_values({max_size, width}, std::move(reps), true),
          nn::Film::init(latent_dim, width, rng)};
}

void FirstnParams::collect(nn::ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".reference", reference});
  conditioning.collect(out, prefix + ".film");
}

CreationOutput create_firstn(const FirstnParams& p, const Tensor& z, std::size_t n) {
  require_size(n, p.capacity());
  std::vector<std::size_t> selected = iota(n);
  const Tensor rows = ops::gather_rows(p.reference, selected);
  return {condition_latent(rows, z, p.conditioning), std::move(selected)};
}

IidParams IidParams::init(std::size_t latent_dim, std::size_t width, std::size_t low_dim,
                          Rng& rng) {
  return {nn::Linear::init(low_dim, width, rng), nn::Film::init(latent_dim, width, rng)};
}

void IidParams::collect(nn::ParamList& out, const std::string& prefix) const {
  lift.collect(out, prefix + ".lift");
  conditioning.collect(out, prefix + ".film");
}

CreationOutput create_iid(const IidParams& p, const Tensor& z, std::size_t n, Rng& rng) {
  if (n < 1) throw ContractError("creation needs n >= 1");
  std::vector<double> noise(n * p.low_dim());
  for (double& v : noise) v = rng.normal();
  const Tensor samples = Tensor::from_values({n, p.low_dim()}, std::move(noise));
  return {condition_latent(p.lift.forward(samples), z, p.conditioning), {}};
}

MlpCreatorParams MlpCreatorParams::init(std::size_t latent_dim, std::size_t width,
                                        std::size_t max_size, Rng& rng) {
  return {nn::Mlp::init({latent_dim, width, max_size * width}, rng), max_size, width};
}

void MlpCreatorParams::collect(nn::ParamList& out, const std::string& prefix) const {
  mlp.collect(out, prefix + ".mlp");
}

CreationOutput create_mlp(const MlpCreatorParams& p, const Tensor& z, std::size_t n) {
  require_size(n, p.capacity());
  const Tensor flat = nn::mlp_forward(p.mlp, as_row(z));
  const Tensor grid = ops::reshape(flat, {p.max_size, p.width});
  return {n == p.max_size ? grid : ops::slice_rows(grid, 0, n), {}};
}

}  // namespace setgen::creation
