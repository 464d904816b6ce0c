#include "setgen/nn.hpp"

#include <array>
#include <cmath>

#include "setgen/errors.hpp"
#include "setgen/ops.hpp"

namespace setgen::nn {

void zero_grads(ParamList& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> values(fan_in * fan_out);
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor::from_values({fan_in, fan_out}, std::move(values), true);
}

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  return {xavier_uniform(in, out, rng), Tensor::zeros({1, out}, true)};
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != in()) {
    throw ShapeError("linear expects (n, " + std::to_string(in()) + "), got " +
                     shape_string(x.shape()));
  }
  return ops::add(ops::matmul(x, weight), bias);
}

void Linear::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Mlp Mlp::init(std::span<const std::size_t> dims, Rng& rng) {
  if (dims.size() < 2) throw ContractError("Mlp needs at least input and output dims");
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    mlp.layers.push_back(Linear::init(dims[i], dims[i + 1], rng));
  }
  return mlp;
}

void Mlp::collect(ParamList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].collect(out, prefix + "." + std::to_string(i));
  }
}

Tensor mlp_forward(const Mlp& mlp, const Tensor& x) {
  Tensor h = x;
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    h = mlp.layers[i].forward(h);
    if (i + 1 < mlp.layers.size()) h = ops::relu(h);
  }
  return h;
}

Film Film::init(std::size_t cond_dim, std::size_t width, Rng& rng) {
  Film f{Linear::init(cond_dim, width, rng), Linear::init(cond_dim, width, rng)};
  f.scale.bias = Tensor::full({1, width}, 1.0, true);
  return f;
}

void Film::collect(ParamList& out, const std::string& prefix) const {
  scale.collect(out, prefix + ".scale");
  shift.collect(out, prefix + ".shift");
}

Tensor film(const Film& p, const Tensor& x, const Tensor& cond) {
  const Tensor c = cond.rank() == 2 ? cond : ops::reshape(cond, {1, cond.numel()});
  if (c.rows() != 1 || c.cols() != p.cond_dim()) {
    throw ShapeError("film conditioning must have " + std::to_string(p.cond_dim()) +
                     " entries, got " + shape_string(cond.shape()));
  }
  if (x.rank() != 2 || x.cols() != p.width()) {
    throw ShapeError("film input must be (n, " + std::to_string(p.width()) + "), got " +
                     shape_string(x.shape()));
  }
  return ops::add(ops::mul(x, p.scale.forward(c)), p.shift.forward(c));
}

LayerNorm LayerNorm::init(std::size_t width) {
  return {Tensor::full({1, width}, 1.0, true), Tensor::zeros({1, width}, true)};
}

void LayerNorm::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".gain", gain});
  out.push_back({prefix + ".bias", bias});
}

Tensor layer_norm(const LayerNorm& p, const Tensor& x) {
  const Tensor centered = ops::sub(x, ops::mean_cols(x));
  const Tensor var = ops::mean_cols(ops::square(centered));
  const Tensor normed = ops::div(centered, ops::sqrt(ops::add_scalar(var, p.eps)));
  return ops::add(ops::mul(normed, p.gain), p.bias);
}

TransformerParams TransformerParams::init(std::size_t width, std::size_t heads, Rng& rng) {
  if (heads == 0 || width % heads != 0) {
    throw ContractError("transformer width " + std::to_string(width) +
                        " is not divisible by " + std::to_string(heads) + " heads");
  }
  TransformerParams p;
  p.heads = heads;
  p.norm_attention = LayerNorm::init(width);
  p.query = Linear::init(width, width, rng);
  p.key = Linear::init(width, width, rng);
  p.value = Linear::init(width, width, rng);
  p.output = Linear::init(width, width, rng);
  p.norm_feed_forward = LayerNorm::init(width);
  p.feed_forward = Mlp::init({width, 4 * width, width}, rng);
  return p;
}

void TransformerParams::collect(ParamList& out, const std::string& prefix) const {
  norm_attention.collect(out, prefix + ".ln1");
  query.collect(out, prefix + ".q");
  key.collect(out, prefix + ".k");
  value.collect(out, prefix + ".v");
  output.collect(out, prefix + ".o");
  norm_feed_forward.collect(out, prefix + ".ln2");
  feed_forward.collect(out, prefix + ".ff");
}

Tensor transformer_block(const TransformerParams& p, const Tensor& x) {
  const std::size_t c = p.width();
  if (x.rank() != 2 || x.cols() != c || x.rows() == 0) {
    throw ShapeError("transformer block expects (n>=1, " + std::to_string(c) + "), got " +
                     shape_string(x.shape()));
  }
  const std::size_t head_dim = c / p.heads;
  const double temperature = 1.0 / std::sqrt(static_cast<double>(head_dim));

  const Tensor h = layer_norm(p.norm_attention, x);
  const Tensor q = p.query.forward(h);
  const Tensor k = p.key.forward(h);
  const Tensor v = p.value.forward(h);
  std::vector<Tensor> heads;
  heads.reserve(p.heads);
  for (std::size_t i = 0; i < p.heads; ++i) {
    const std::size_t b = i * head_dim;
    const std::size_t e = b + head_dim;
    const Tensor scores =
        ops::scale(ops::matmul(ops::slice_cols(q, b, e), ops::transpose(ops::slice_cols(k, b, e))),
                   temperature);
    heads.push_back(ops::matmul(ops::softmax_lastdim(scores), ops::slice_cols(v, b, e)));
  }
  const Tensor attended = p.output.forward(p.heads == 1 ? heads[0] : ops::concat_cols(heads));
  const Tensor y = ops::add(x, attended);
  return ops::add(y, mlp_forward(p.feed_forward, layer_norm(p.norm_feed_forward, y)));
}

Tensor pna_pool(const Tensor& x) {
  if (x.rank() != 2 || x.rows() == 0) {
    throw ShapeError("pna_pool expects (n>=1, c), got " + shape_string(x.shape()));
  }
  const std::array<Tensor, 4> parts{ops::sum_rows(x), ops::mean_rows(x), ops::max_rows(x),
                                    ops::std_rows(x)};
  return ops::concat_cols(parts);
}

}  // namespace setgen::nn
