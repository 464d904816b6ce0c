#include "setgen/vae.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "setgen/errors.hpp"
#include "setgen/ops.hpp"

namespace setgen::vae {

std::string to_string(CreatorKind kind) {
  switch (kind) {
    case CreatorKind::mlp: return "mlp";
    case CreatorKind::iid: return "iid";
    case CreatorKind::firstn: return "firstn";
    case CreatorKind::topn: return "topn";
  }
  return "?";
}

CreatorKind parse_creator(const std::string& name) {
  if (name == "mlp") return CreatorKind::mlp;
  if (name == "iid") return CreatorKind::iid;
  if (name == "firstn") return CreatorKind::firstn;
  if (name == "topn") return CreatorKind::topn;
  throw ContractError("unknown creator '" + name + "' (expected mlp|iid|firstn|topn)");
}

std::string to_string(SizeMode mode) {
  return mode == SizeMode::empirical ? "empirical" : "learned";
}

SizeMode parse_size_mode(const std::string& name) {
  if (name == "empirical") return SizeMode::empirical;
  if (name == "learned") return SizeMode::learned;
  throw ContractError("unknown size mode '" + name + "' (expected empirical|learned)");
}

std::string to_string(EncoderPooling pooling) {
  return pooling == EncoderPooling::pna ? "pna" : "ordered";
}

EncoderPooling parse_pooling(const std::string& name) {
  if (name == "pna") return EncoderPooling::pna;
  if (name == "ordered") return EncoderPooling::ordered;
  throw ContractError("unknown pooling '" + name + "' (expected pna|ordered)");
}

namespace {

constexpr double kLogvarInitScale = 0.01;

std::vector<nn::TransformerParams> init_blocks(const ModelConfig& cfg, Rng& rng) {
  std::vector<nn::TransformerParams> blocks;
  for (std::size_t i = 0; i < cfg.blocks; ++i) {
    blocks.push_back(nn::TransformerParams::init(cfg.hidden, cfg.heads, rng));
  }
  return blocks;
}

void collect_blocks(const std::vector<nn::TransformerParams>& blocks, nn::ParamList& out,
                    const std::string& prefix) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].collect(out, prefix + ".block" + std::to_string(i));
  }
}

Tensor run_blocks(const std::vector<nn::TransformerParams>& blocks, Tensor x) {
  for (const auto& b : blocks) x = nn::transformer_block(b, x);
  return x;
}

}  // namespace

EncoderParams EncoderParams::init(const ModelConfig& cfg, Rng& rng) {
  EncoderParams p;
  p.point_mlp = nn::Mlp::init({cfg.point_dim, cfg.hidden, cfg.hidden}, rng);
  p.blocks = init_blocks(cfg, rng);
  p.head = nn::Mlp::init({4 * cfg.hidden, cfg.hidden, 2 * cfg.latent_dim}, rng);
  // Start near unit posterior variance.
  {
    Tensor w = p.head.layers.back().weight;
    auto v = w.mutable_data();
    const std::size_t cols = 2 * cfg.latent_dim;
    for (std::size_t i = 0; i < cfg.hidden; ++i)
      for (std::size_t j = cfg.latent_dim; j < cols; ++j) v[i * cols + j] *= kLogvarInitScale;
  }
  p.pooling = cfg.pooling;
  p.logvar_min = cfg.logvar_min;
  p.logvar_max = cfg.logvar_max;
  return p;
}

void EncoderParams::collect(nn::ParamList& out, const std::string& prefix) const {
  point_mlp.collect(out, prefix + ".point_mlp");
  collect_blocks(blocks, out, prefix);
  head.collect(out, prefix + ".head");
}

Encoded encode(const EncoderParams& p, const Tensor& x) {
  if (x.rank() != 2 || x.rows() == 0 || x.cols() != p.point_mlp.in()) {
    throw ShapeError("encoder expects (n>=1, " + std::to_string(p.point_mlp.in()) + "), got " +
                     shape_string(x.shape()));
  }
  const Tensor h = run_blocks(p.blocks, nn::mlp_forward(p.point_mlp, x));
  Tensor pooled;
  if (p.pooling == EncoderPooling::pna) {
    pooled = nn::pna_pool(h);
  } else {
    const std::array<Tensor, 4> parts{ops::slice_rows(h, 0, 1), ops::mean_rows(h),
                                      ops::max_rows(h), ops::std_rows(h)};
    pooled = ops::concat_cols(parts);
  }
  const Tensor out = nn::mlp_forward(p.head, pooled);
  const std::size_t l = out.cols() / 2;
  return {ops::slice_cols(out, 0, l),
          ops::clamp(ops::slice_cols(out, l, 2 * l), p.logvar_min, p.logvar_max)};
}

Tensor reparameterize(const Tensor& mu, const Tensor& logvar, Rng& rng) {
  if (mu.shape() != logvar.shape()) throw ShapeError("reparameterize: mu/logvar shape mismatch");
  std::vector<double> eps(mu.numel());
  for (double& e : eps) e = rng.normal();
  const Tensor noise = Tensor::from_values(mu.shape(), std::move(eps));
  return ops::add(mu, ops::mul(ops::exp(ops::scale(logvar, 0.5)), noise));
}

DecoderParams DecoderParams::init(const ModelConfig& cfg, Rng& rng) {
  DecoderParams p;
  switch (cfg.creator) {
    case CreatorKind::mlp:
      p.creator = creation::MlpCreatorParams::init(cfg.latent_dim, cfg.hidden, cfg.max_size, rng);
      break;
    case CreatorKind::iid:
      p.creator = creation::IidParams::init(cfg.latent_dim, cfg.hidden, cfg.low_dim, rng);
      break;
    case CreatorKind::firstn:
      p.creator = creation::FirstnParams::init(cfg.latent_dim, cfg.hidden, cfg.max_size, rng);
      break;
    case CreatorKind::topn:
      p.creator = creation::TopnParams::init(cfg.latent_dim, cfg.hidden, cfg.angle_dim,
                                             cfg.resolved_reference_size(), rng);
      break;
  }
  p.project = nn::Linear::init(cfg.hidden, cfg.hidden, rng);
  p.blocks = init_blocks(cfg, rng);
  p.head = nn::Mlp::init({cfg.hidden, cfg.hidden, cfg.point_dim}, rng);
  return p;
}

CreatorKind DecoderParams::kind() const {
  return static_cast<CreatorKind>(creator.index());
}

std::size_t DecoderParams::capacity() const {
  return std::visit(
      [](const auto& c) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, creation::IidParams>) {
          return std::numeric_limits<std::size_t>::max();
        } else {
          return c.capacity();
        }
      },
      creator);
}

void DecoderParams::collect(nn::ParamList& out, const std::string& prefix) const {
  std::visit([&](const auto& c) { c.collect(out, prefix + ".creator"); }, creator);
  project.collect(out, prefix + ".project");
  collect_blocks(blocks, out, prefix);
  head.collect(out, prefix + ".head");
}

Tensor decode_embeddings(const DecoderParams& p, const Tensor& z, std::size_t n, Rng& rng) {
  const creation::CreationOutput created = std::visit(
      [&](const auto& c) -> creation::CreationOutput {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, creation::MlpCreatorParams>) {
          return creation::create_mlp(c, z, n);
        } else if constexpr (std::is_same_v<T, creation::IidParams>) {
          return creation::create_iid(c, z, n, rng);
        } else if constexpr (std::is_same_v<T, creation::FirstnParams>) {
          return creation::create_firstn(c, z, n);
        } else {
          return creation::create_topn(c, z, n);
        }
      },
      p.creator);
  return run_blocks(p.blocks, p.project.forward(created.points));
}

Tensor decode(const DecoderParams& p, const Tensor& z, std::size_t n, Rng& rng) {
  return nn::mlp_forward(p.head, decode_embeddings(p, z, n, rng));
}

SizeModel SizeModel::empirical(std::map<std::size_t, double> histogram) {
  if (histogram.empty()) throw ContractError("size model needs a non-empty histogram");
  double total = 0.0;
  for (const auto& [n, p] : histogram) {
    if (n == 0 || p < 0.0) throw ContractError("size histogram has an invalid entry");
    total += p;
  }
  if (!(total > 0.0)) throw ContractError("size histogram has zero mass");
  for (auto& [n, p] : histogram) p /= total;
  SizeModel m;
  m.histogram_ = std::move(histogram);
  m.cap_ = m.histogram_.rbegin()->first;
  return m;
}

SizeModel SizeModel::learned(std::map<std::size_t, double> histogram, std::size_t latent_dim,
                             std::size_t hidden, std::size_t cap, Rng& rng) {
  SizeModel m = empirical(std::move(histogram));
  if (cap < m.cap_) throw ContractError("learned size cap below the largest training size");
  m.mode_ = SizeMode::learned;
  m.cap_ = cap;
  m.mlp_ = nn::Mlp::init({latent_dim, hidden, cap}, rng);
  return m;
}

std::size_t SizeModel::sample_empirical(Rng& rng, bool extrapolate) const {
  if (histogram_.empty()) throw ContractError("size model has no histogram");
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t n = histogram_.rbegin()->first;
  for (const auto& [size, p] : histogram_) {
    acc += p;
    if (u < acc) {
      n = size;
      break;
    }
  }
  return extrapolate ? n + kExtrapolationShift : n;
}

Tensor SizeModel::logits(const Tensor& z) const {
  if (mode_ != SizeMode::learned) throw ContractError("size logits need a learned size model");
  return nn::mlp_forward(mlp_, z.rank() == 2 ? z : ops::reshape(z, {1, z.numel()}));
}

Tensor SizeModel::auxiliary_loss(const Tensor& z, std::size_t true_size) const {
  if (true_size < 1 || true_size > cap_) {
    throw ContractError("true size " + std::to_string(true_size) + " outside [1, cap]");
  }
  const Tensor log_probs = ops::log_softmax_lastdim(logits(z));
  return ops::neg(ops::slice_cols(log_probs, true_size - 1, true_size));
}

std::size_t SizeModel::predict(const Tensor& z, bool extrapolate) const {
  const Tensor l = logits(z);
  const auto v = l.data();
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best + 1 + (extrapolate ? kExtrapolationShift : 0);
}

std::size_t SizeModel::sample(const Tensor& z, Rng& rng, bool extrapolate) const {
  return mode_ == SizeMode::learned ? predict(z, extrapolate) : sample_empirical(rng, extrapolate);
}

void SizeModel::collect(nn::ParamList& out, const std::string& prefix) const {
  if (mode_ == SizeMode::learned) mlp_.collect(out, prefix + ".mlp");
}

SetVae SetVae::init(const ModelConfig& cfg, std::map<std::size_t, double> size_histogram,
                    std::uint64_t seed) {
  Rng rng(seed);
  SetVae model;
  model.config_ = cfg;
  model.encoder_ = EncoderParams::init(cfg, rng);
  model.decoder_ = DecoderParams::init(cfg, rng);
  model.size_model_ =
      cfg.size_mode == SizeMode::learned
          ? SizeModel::learned(std::move(size_histogram), cfg.latent_dim, cfg.hidden,
                               cfg.resolved_size_cap(), rng)
          : SizeModel::empirical(std::move(size_histogram));
  return model;
}

ForwardResult SetVae::forward(const Tensor& x, Rng& rng, bool sample) const {
  const Encoded enc = encode(x);
  const Tensor z = sample ? reparameterize(enc.mu, enc.logvar, rng) : enc.mu;
  return {decode(z, x.rows(), rng), enc.mu, enc.logvar, z};
}

nn::ParamList SetVae::params() const {
  nn::ParamList out;
  encoder_.collect(out, "encoder");
  decoder_.collect(out, "decoder");
  size_model_.collect(out, "size");
  return out;
}

void SetVae::after_step() {
  if (auto* topn = std::get_if<creation::TopnParams>(&decoder_.creator)) {
    topn->reference.project_angles();
  }
}

GenerateResult generate(const SetVae& model, std::size_t count, Rng& rng, bool extrapolate) {
  constexpr std::size_t kMaxRetries = 100;
  GenerateResult result;
  const std::size_t l = model.config().latent_dim;
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t attempt = 0;; ++attempt) {
      std::vector<double> eps(l);
      for (double& e : eps) e = rng.normal();
      const Tensor z = Tensor::row(std::move(eps));
      const std::size_t n = model.size_model().sample(z, rng, extrapolate);
      try {
        result.sets.push_back(model.decode(z, n, rng).to_matrix());
        break;
      } catch (const CapacityError&) {
        ++result.capacity_failures;
        if (attempt + 1 >= kMaxRetries) throw;
      }
    }
  }
  return result;
}

}  // namespace setgen::vae
