#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "setgen/creation.hpp"
#include "setgen/nn.hpp"
#include "setgen/rng.hpp"
#include "setgen/tensor.hpp"

namespace setgen::vae {

enum class CreatorKind { mlp, iid, firstn, topn };
enum class SizeMode { empirical, learned };
// `ordered` replaces the sum channel of the pooled summary by the first row;
// it exists only as a non-invariant negative control.
enum class EncoderPooling { pna, ordered };

std::string to_string(CreatorKind kind);
CreatorKind parse_creator(const std::string& name);
std::string to_string(SizeMode mode);
SizeMode parse_size_mode(const std::string& name);
std::string to_string(EncoderPooling pooling);
EncoderPooling parse_pooling(const std::string& name);

struct ModelConfig {
  std::size_t point_dim = 3;
  std::size_t latent_dim = 32;
  std::size_t hidden = 64;
  std::size_t heads = 4;
  std::size_t blocks = 3;
  std::size_t angle_dim = 16;
  std::size_t low_dim = 8;
  CreatorKind creator = CreatorKind::topn;
  std::size_t max_size = 35;        // largest training set (MLP / First-n capacity)
  std::size_t reference_size = 0;   // Top-n n0; 0 means 2 * max_size
  SizeMode size_mode = SizeMode::empirical;
  std::size_t size_cap = 0;         // learned size classes [1, cap]; 0 means 2 * max_size
  EncoderPooling pooling = EncoderPooling::pna;
  double logvar_min = -10.0;
  double logvar_max = 10.0;

  std::size_t resolved_reference_size() const {
    return reference_size ? reference_size : 2 * max_size;
  }
  std::size_t resolved_size_cap() const { return size_cap ? size_cap : 2 * max_size; }
};

struct EncoderParams {
  nn::Mlp point_mlp;  // d -> c -> c
  std::vector<nn::TransformerParams> blocks;
  nn::Mlp head;  // 4c -> c -> 2l
  EncoderPooling pooling = EncoderPooling::pna;
  double logvar_min = -10.0;
  double logvar_max = 10.0;

  static EncoderParams init(const ModelConfig& cfg, Rng& rng);
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

struct Encoded {
  Tensor mu;      // 1 x l
  Tensor logvar;  // 1 x l, clamped
};

// Invariant to row permutations of x when pooling is pna.
Encoded encode(const EncoderParams& p, const Tensor& x);

// z = mu + exp(logvar / 2) * eps with eps ~ N(0, I).
Tensor reparameterize(const Tensor& mu, const Tensor& logvar, Rng& rng);

using CreatorParams = std::variant<creation::MlpCreatorParams, creation::IidParams,
                                   creation::FirstnParams, creation::TopnParams>;

struct DecoderParams {
  CreatorParams creator;
  nn::Linear project;  // c -> c
  std::vector<nn::TransformerParams> blocks;
  nn::Mlp head;  // c -> c -> d

  static DecoderParams init(const ModelConfig& cfg, Rng& rng);
  CreatorKind kind() const;
  // Largest n the creator accepts; SIZE_MAX for i.i.d. creation.
  std::size_t capacity() const;
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

// Creation, linear map and transformer blocks: per-point embeddings n x c.
Tensor decode_embeddings(const DecoderParams& p, const Tensor& z, std::size_t n, Rng& rng);
// Full decoder: n x d coordinates.
Tensor decode(const DecoderParams& p, const Tensor& z, std::size_t n, Rng& rng);

class SizeModel {
 public:
  SizeModel() = default;
  static SizeModel empirical(std::map<std::size_t, double> histogram);
  static SizeModel learned(std::map<std::size_t, double> histogram, std::size_t latent_dim,
                           std::size_t hidden, std::size_t cap, Rng& rng);

  SizeMode mode() const { return mode_; }
  const std::map<std::size_t, double>& histogram() const { return histogram_; }
  std::size_t cap() const { return cap_; }
  const nn::Mlp& mlp() const { return mlp_; }

  // Draw from p(n); extrapolation shifts every size by +10.
  std::size_t sample_empirical(Rng& rng, bool extrapolate = false) const;
  // Logits over sizes 1..cap (1 x cap).
  Tensor logits(const Tensor& z) const;
  // Cross-entropy of the true size under the predicted logits.
  Tensor auxiliary_loss(const Tensor& z, std::size_t true_size) const;
  // argmax of the logits (+10 when extrapolating).
  std::size_t predict(const Tensor& z, bool extrapolate = false) const;
  std::size_t sample(const Tensor& z, Rng& rng, bool extrapolate) const;

  void collect(nn::ParamList& out, const std::string& prefix) const;

 private:
  SizeMode mode_ = SizeMode::empirical;
  std::map<std::size_t, double> histogram_;
  nn::Mlp mlp_;
  std::size_t cap_ = 0;
};

inline constexpr std::size_t kExtrapolationShift = 10;

struct ForwardResult {
  Tensor x_hat;
  Tensor mu;
  Tensor logvar;
  Tensor z;
};

class SetVae {
 public:
  static SetVae init(const ModelConfig& cfg, std::map<std::size_t, double> size_histogram,
                     std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const EncoderParams& encoder() const { return encoder_; }
  const DecoderParams& decoder() const { return decoder_; }
  const SizeModel& size_model() const { return size_model_; }

  Encoded encode(const Tensor& x) const { return vae::encode(encoder_, x); }
  Tensor decode(const Tensor& z, std::size_t n, Rng& rng) const {
    return vae::decode(decoder_, z, n, rng);
  }
  // Encode, sample z (or take z = mu when `sample` is false), decode at the input size.
  ForwardResult forward(const Tensor& x, Rng& rng, bool sample = true) const;

  // Every trainable tensor in a fixed, named order.
  nn::ParamList params() const;
  // Keeps model invariants after an optimizer step (Top-n angle norms).
  void after_step();

 private:
  ModelConfig config_;
  EncoderParams encoder_;
  DecoderParams decoder_;
  SizeModel size_model_;
};

struct GenerateResult {
  std::vector<Matrix> sets;
  std::size_t capacity_failures = 0;
};

// z ~ N(0, I), n from the size model, decode; one set at a time. A size
// beyond the creator's capacity is counted and resampled, at most 100 times
// per set before CapacityError propagates.
GenerateResult generate(const SetVae& model, std::size_t count, Rng& rng, bool extrapolate);

}  // namespace setgen::vae
