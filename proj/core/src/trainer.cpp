#include "setgen/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "setgen/errors.hpp"
#include "setgen/ops.hpp"

namespace setgen::trainer {

std::string to_string(ReconLoss r) {
  switch (r) {
    case ReconLoss::w2: return "w2";
    case ReconLoss::chamfer: return "chamfer";
    case ReconLoss::first_row: return "first_row";
  }
  return "?";
}

ReconLoss parse_recon_loss(const std::string& name) {
  if (name == "w2") return ReconLoss::w2;
  if (name == "chamfer") return ReconLoss::chamfer;
  if (name == "first_row") return ReconLoss::first_row;
  throw ContractError("unknown reconstruction loss '" + name + "' (expected w2|chamfer|first_row)");
}

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

}  // namespace

std::vector<Batch> make_batches(const std::vector<std::size_t>& sizes, std::size_t batch_size,
                                Rng& rng) {
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < sizes.size(); ++i) groups[sizes[i]].push_back(i);
  std::vector<Batch> batches;
  for (auto& [n, members] : groups) {
    shuffle(members, rng);
    for (std::size_t b = 0; b < members.size(); b += batch_size) {
      batches.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(b),
                           members.begin() + static_cast<std::ptrdiff_t>(
                                                 std::min(members.size(), b + batch_size)));
    }
  }
  shuffle(batches, rng);
  return batches;
}

std::vector<Batch> make_batches(const std::vector<PointSet>& sets, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> sizes;
  sizes.reserve(sets.size());
  for (const auto& s : sets) sizes.push_back(s.rows());
  return make_batches(sizes, batch_size, rng);
}

Tensor first_row_loss(const Tensor& x, const Tensor& x_hat) {
  const Tensor d = ops::sub(ops::slice_rows(x, 0, 1), ops::slice_rows(x_hat, 0, 1));
  return ops::mean(ops::square(d));
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out << "step,total,w2,kl,reg2,reg3,aux_n,lr\n";
  auto num = [](double v) { return nlohmann::json(v).dump(); };
  for (const auto& s : steps) {
    out << s.step << ',' << num(s.total) << ',' << num(s.w2) << ',' << num(s.kl) << ','
        << num(s.reg2) << ',' << num(s.reg3) << ',' << num(s.aux_n) << ',' << num(s.lr) << '\n';
  }
  return out.str();
}

void TrainLog::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << to_csv();
  if (!f) throw IoError("write failed for " + path);
}

std::map<std::size_t, double> size_counts(const std::vector<PointSet>& sets) {
  std::map<std::size_t, double> counts;
  for (const auto& s : sets) counts[s.rows()] += 1.0;
  return counts;
}

Trainer::Trainer(vae::SetVae& model, const std::vector<PointSet>& sets, TrainConfig cfg,
                 std::uint64_t seed)
    : model_(model),
      sets_(sets),
      cfg_(std::move(cfg)),
      adam_(model.params(), cfg_.adam),
      scheduler_(cfg_.plateau),
      rng_(Rng(seed).split(kTrainStreamKey)) {
  if (sets_.empty()) throw ContractError("training needs a nonempty dataset");
}

StepRecord Trainer::train_step(const Batch& batch) {
  auto params = adam_.params();
  nn::zero_grads(params);
  const auto& w = cfg_.weights;
  const double inv = 1.0 / static_cast<double>(batch.size());
  Tensor total;
  StepRecord rec;
  for (std::size_t idx : batch) {
    const Tensor x = Tensor::from_matrix(sets_[idx]);
    const auto out = model_.forward(x, rng_, cfg_.sample_latent);
    Tensor recon;
    switch (cfg_.recon) {
      case ReconLoss::w2: recon = losses::w2_equal(x, out.x_hat); break;
      case ReconLoss::chamfer: recon = losses::chamfer(x, out.x_hat); break;
      case ReconLoss::first_row: recon = first_row_loss(x, out.x_hat); break;
    }
    const Tensor kl = ops::scale(losses::kl_diag_gauss(out.mu, out.logvar), w.kl);
    const Tensor reg2 = ops::scale(losses::reg_min_dist(out.x_hat, w.d0), w.min_dist);
    const Tensor reg3 = ops::scale(
        losses::reg_valency(out.x_hat, w.neighbor_distance, w.max_neighbors, w.temperature()),
        w.valency);
    Tensor loss = ops::add(ops::add(recon, kl), ops::add(reg2, reg3));
    rec.w2 += recon.item() * inv;
    rec.kl += kl.item() * inv;
    rec.reg2 += reg2.item() * inv;
    rec.reg3 += reg3.item() * inv;
    if (model_.size_model().mode() == vae::SizeMode::learned) {
      const Tensor aux =
          ops::scale(model_.size_model().auxiliary_loss(out.z, x.rows()), cfg_.size_aux_weight);
      rec.aux_n += aux.item() * inv;
      loss = ops::add(loss, aux);
    }
    total = total.node_ptr() ? ops::add(total, loss) : loss;
  }
  total = ops::scale(total, inv);
  rec.step = step_;
  rec.total = rec.w2 + rec.kl + rec.reg2 + rec.reg3 + rec.aux_n;
  rec.lr = adam_.lr();
  if (!std::isfinite(total.item())) {
    throw NumericsError("non-finite loss at step " + std::to_string(step_));
  }
  total.backward();
  adam_.step();
  model_.after_step();
  return rec;
}

bool Trainer::run_epoch() {
  if (epoch_ >= cfg_.epochs) return false;
  if (cfg_.max_steps && step_ >= cfg_.max_steps) return false;
  const auto batches = make_batches(sets_, cfg_.batch_size, rng_);
  double w2_sum = 0.0;
  std::size_t w2_count = 0;
  for (const auto& batch : batches) {
    if (cfg_.max_steps && step_ >= cfg_.max_steps) break;
    StepRecord rec;
    try {
      rec = train_step(batch);
    } catch (const NumericsError& e) {
      const std::string msg = e.what();
      if (msg.find("at step") != std::string::npos) throw;
      throw NumericsError(msg + " (at step " + std::to_string(step_) + ")");
    }
    log_.steps.push_back(rec);
    if (hook_) hook_(rec);
    w2_sum += rec.w2 * static_cast<double>(batch.size());
    w2_count += batch.size();
    ++step_;
  }
  const double mean_w2 = w2_count ? w2_sum / static_cast<double>(w2_count) : 0.0;
  adam_.set_lr(scheduler_.step(mean_w2, adam_.lr()));
  log_.epochs.push_back({epoch_, mean_w2, adam_.lr()});
  ++epoch_;
  return true;
}

const TrainLog& Trainer::run() {
  while (run_epoch()) {
  }
  return log_;
}

}  // namespace setgen::trainer
