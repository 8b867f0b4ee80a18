#include "gst/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "gst/error.hpp"
#include "gst/kernels.hpp"
#include "gst/rng.hpp"

namespace gst {
namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

// Signals interleaved at random, each signal's windows kept in temporal order.
// A cap keeps a random subset with the same relative order.
std::vector<std::size_t> epoch_order(const std::vector<std::pair<std::size_t, std::size_t>>& seqs, Rng& rng,
                                     std::size_t cap) {
  std::vector<std::size_t> slots(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) slots[i] = seqs[i].first;
  shuffle(slots, rng);
  std::map<std::size_t, std::vector<std::size_t>> pending;
  for (std::size_t i = seqs.size(); i-- > 0;) pending[seqs[i].first].push_back(i);
  std::vector<std::size_t> order;
  order.reserve(seqs.size());
  for (std::size_t d : slots) {
    order.push_back(pending[d].back());
    pending[d].pop_back();
  }
  if (cap == 0 || cap >= order.size()) return order;
  std::vector<std::size_t> pick(order.size());
  std::iota(pick.begin(), pick.end(), 0);
  shuffle(pick, rng);
  pick.resize(cap);
  std::sort(pick.begin(), pick.end());
  std::vector<std::size_t> out;
  for (std::size_t p : pick) out.push_back(order[p]);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

LossTerms composite_loss(Tape& t, Var pred, const Tensor& truth, const Tensor& moment_w, double lambda) {
  if (lambda < 0.0) fail_config("moment penalty weight must be >= 0");
  if (t.value(pred).size() != truth.size() || moment_w.size() != truth.size())
    fail_config("loss: prediction " + t.value(pred).shape_string() + ", truth " + truth.shape_string() +
                ", weights " + moment_w.shape_string());
  LossTerms l;
  l.mae = mean_abs_error(t, pred, truth);
  double true_moment = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) true_moment += moment_w[i] * truth[i];
  l.moment = abs(t, add_scalar(t, dot_const(t, pred, moment_w), -true_moment));
  l.total = lambda == 0.0 ? l.mae : add(t, l.mae, scale(t, l.moment, lambda));
  return l;
}

Adam::Adam(const ParamStore& ps, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  if (!(lr > 0.0)) fail_config("learning rate must be positive");
  for (ParamId id = 0; id < ps.size(); ++id) {
    m_.emplace_back(ps.value(id).shape(), 0.0);
    v_.emplace_back(ps.value(id).shape(), 0.0);
  }
}

void Adam::step(ParamStore& ps) {
  if (ps.size() != m_.size()) fail_config("optimizer state does not match parameter store");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (ParamId id = 0; id < ps.size(); ++id) {
    Tensor& w = ps.value(id);
    const Tensor& g = ps.grad(id);
    Tensor& m = m_[id];
    Tensor& v = v_[id];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1_ * m[i] + (1.0 - b1_) * g[i];
      v[i] = b2_ * v[i] + (1.0 - b2_) * g[i] * g[i];
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

std::vector<std::size_t> sequence_starts(std::size_t frames, std::size_t seq_len) {
  if (seq_len == 0) fail_config("sequence length must be positive");
  std::vector<std::size_t> starts;
  for (std::size_t s = kWindow; s + seq_len <= frames; s += seq_len) starts.push_back(s);
  return starts;
}

Var sequence_loss(Tape& t, const GstModel& model, const Dataset& d, std::size_t start, std::size_t seq_len,
                  const Tensor& moment_w, double lambda, LossTerms* last) {
  if (start < kWindow || start + seq_len > d.frames()) fail_config("mini-sequence out of range");
  std::vector<EncodedFrame> motion;
  for (std::size_t f = start - kWindow; f + 1 < start + seq_len; ++f) motion.push_back(model.encode_motion(t, d.motion[f]));
  std::vector<EncodedFrame> pressure;
  if (model.config().armax)
    for (std::size_t f = start - kWindow; f < start; ++f)
      pressure.push_back(model.encode_pressure(t, t.constant(to_column(d.cp[f]))));
  Var total;
  double mae_sum = 0.0, moment_sum = 0.0;
  for (std::size_t j = 0; j < seq_len; ++j) {
    const std::span<const EncodedFrame> mw(motion.data() + j, kWindow);
    std::span<const EncodedFrame> pw;
    if (model.config().armax) pw = std::span<const EncodedFrame>(pressure.data() + j, kWindow);
    const Var pred = model.predict(t, mw, pw);
    const LossTerms l = composite_loss(t, pred, to_column(d.cp[start + j]), moment_w, lambda);
    total = j == 0 ? l.total : add(t, total, l.total);
    mae_sum += t.value(l.mae).item();
    moment_sum += t.value(l.moment).item();
    if (model.config().armax && j + 1 < seq_len) pressure.push_back(model.encode_pressure(t, pred));
  }
  if (last != nullptr) {
    last->total = total;
    last->mae = t.constant(Tensor::scalar(mae_sum));
    last->moment = t.constant(Tensor::scalar(moment_sum));
  }
  return total;
}

TrainResult train_bptt(GstModel& model, std::span<const Dataset> train, const SurfaceMesh& mesh,
                       const TrainConfig& cfg, const LossConfig& loss, const ProgressFn& progress) {
  if (train.empty()) fail_config("training needs at least one dataset");
  if (cfg.batch != 1) fail_config("only batch size 1 is supported");
  if (cfg.epochs == 0) fail_config("epochs must be positive");
  const Tensor moment_w = moment_weights(mesh, mesh_refs(mesh));
  std::vector<std::pair<std::size_t, std::size_t>> seqs;
  for (std::size_t d = 0; d < train.size(); ++d) {
    if (train[d].nodes() != model.nodes()) fail_config("dataset " + train[d].name + " does not match the mesh");
    for (std::size_t s : sequence_starts(train[d].frames(), cfg.seq_len)) seqs.emplace_back(d, s);
  }
  if (seqs.empty()) fail_config("datasets too short for a single mini-sequence");

  Adam adam(model.params(), cfg.lr);
  Rng rng(cfg.seed);
  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = epoch_order(seqs, rng, cfg.max_sequences);
    const std::size_t count = order.size();
    double epoch_sum = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const auto [d, start] = seqs[order[k]];
      Tape t(&model.params());
      LossTerms terms;
      const Var total = sequence_loss(t, model, train[d], start, cfg.seq_len, moment_w, loss.lambda, &terms);
      const double per = t.value(total).item() / static_cast<double>(cfg.seq_len);
      if (!std::isfinite(per))
        fail_numerical("non-finite loss at epoch " + std::to_string(epoch) + ", sequence " + std::to_string(k));
      model.params().zero_grad();
      t.backward(total);
      adam.step(model.params());
      epoch_sum += per;
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.log.push_back({epoch, k, per, t.value(terms.mae).item() / static_cast<double>(cfg.seq_len),
                            t.value(terms.moment).item() / static_cast<double>(cfg.seq_len), wall});
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(count));
    if (progress) progress(epoch, result.epoch_loss.back());
  }
  model.params().zero_grad();
  return result;
}

void write_training_log(const TrainResult& r, const std::filesystem::path& csv) {
  if (csv.has_parent_path()) std::filesystem::create_directories(csv.parent_path());
  std::ofstream out(csv);
  if (!out) fail_io("cannot write training log " + csv.string());
  out << "epoch,sequence,loss,mae,moment,wall_s\n";
  for (const LogRow& row : r.log)
    out << row.epoch << ',' << row.sequence << ',' << fmt(row.loss) << ',' << fmt(row.mae) << ',' << fmt(row.moment)
        << ',' << fmt(row.wall) << '\n';
}

Autoencoder::Autoencoder(ModelConfig config, std::shared_ptr<const ModelOperators> ops, std::uint64_t seed)
    : config_(std::move(config)), ops_(std::move(ops)), seed_(seed) {
  if (!ops_) fail_config("autoencoder needs graph operators");
  Rng rng(seed_);
  enc_ = make_encoder(params_, "encB", 1, config_, rng);
  dec_ = make_decoder(params_, "dec", config_, rng);
}

Var Autoencoder::reconstruct(Tape& t, Var cp) const {
  const double mu = scaling_.mean[kMotionChannels], sd = scaling_.stddev[kMotionChannels];
  const EncodedFrame f = encode(t, enc_, *ops_, scale(t, add_scalar(t, cp, -mu), 1.0 / sd));
  Var skip0, skip1;
  if (config_.skip) skip0 = f.skip0, skip1 = f.skip1;
  const Var out = decode(t, dec_, *ops_, f.latent, skip0, skip1);
  return add_scalar(t, scale(t, out, sd), mu);
}

std::vector<std::vector<double>> augment_snapshots(const std::vector<std::vector<double>>& snapshots,
                                                   const AugmentConfig& aug, std::uint64_t seed) {
  if (snapshots.empty()) fail_config("augmentation needs at least one snapshot");
  if (aug.fraction < 0.0 || aug.fraction > 1.0 || aug.noise < 0.0 || aug.noise > 1.0)
    fail_config("augmentation fractions must lie in [0, 1]");
  const std::size_t n = snapshots.size();
  const auto total = static_cast<std::size_t>(std::ceil((1.0 + aug.fraction) * static_cast<double>(n) - 1e-9));
  std::vector<std::vector<double>> out = snapshots;
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  for (std::size_t k = 0; out.size() < total; ++k) {
    const std::vector<double>& src = snapshots[order[k % n]];
    double mean = 0.0, sq = 0.0;
    for (double v : src) mean += v;
    mean /= static_cast<double>(src.size());
    for (double v : src) sq += (v - mean) * (v - mean);
    const double sd = aug.noise * std::sqrt(sq / static_cast<double>(src.size()));
    std::vector<double> noisy(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) noisy[i] = src[i] + sd * rng.normal();
    out.push_back(std::move(noisy));
  }
  return out;
}

double reconstruction_mae(const Autoencoder& ae, const std::vector<std::vector<double>>& snapshots) {
  if (snapshots.empty()) fail_config("no snapshots to evaluate");
  double sum = 0.0;
  for (const auto& s : snapshots) {
    Tape t(ae.params());
    const Tensor target = to_column(s);
    sum += t.value(mean_abs_error(t, ae.reconstruct(t, t.constant(target)), target)).item();
  }
  return sum / static_cast<double>(snapshots.size());
}

std::vector<double> pretrain_autoencoder(Autoencoder& ae, const std::vector<std::vector<double>>& snapshots,
                                         const AugmentConfig& aug, const TrainConfig& cfg,
                                         const ProgressFn& progress) {
  if (snapshots.empty()) fail_config("pre-training needs at least one snapshot");
  const std::vector<std::vector<double>> data = augment_snapshots(snapshots, aug, cfg.seed);
  Adam adam(ae.params(), cfg.lr);
  Rng rng(cfg.seed + 1);
  std::vector<double> history{reconstruction_mae(ae, snapshots)};
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    const std::size_t count = cfg.max_sequences ? std::min(cfg.max_sequences, order.size()) : order.size();
    for (std::size_t k = 0; k < count; ++k) {
      Tape t(&ae.params());
      const Tensor target = to_column(data[order[k]]);
      const Var l = mean_abs_error(t, ae.reconstruct(t, t.constant(target)), target);
      ae.params().zero_grad();
      t.backward(l);
      adam.step(ae.params());
    }
    history.push_back(reconstruction_mae(ae, snapshots));
    if (progress) progress(epoch, history.back());
  }
  ae.params().zero_grad();
  return history;
}

std::size_t transfer_autoencoder(const ParamStore& ae, GstModel& model) {
  std::map<std::string, ParamId> by_name;
  for (ParamId id = 0; id < ae.size(); ++id) by_name[ae.name(id)] = id;
  std::size_t copied = 0;
  ParamStore& ps = model.params();
  for (ParamId id = 0; id < ps.size(); ++id) {
    const auto it = by_name.find(ps.name(id));
    if (it == by_name.end()) continue;
    if (!ae.value(it->second).same_shape(ps.value(id)))
      fail_config("autoencoder tensor " + ps.name(id) + " has a different shape than the model's");
    ps.value(id) = ae.value(it->second);
    ++copied;
  }
  return copied;
}

}  // namespace gst
