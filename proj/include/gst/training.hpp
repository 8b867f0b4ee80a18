#pragma once

// MAE + moment-penalty loss, Adam, autoencoder pre-training with noisy
// augmentation, and truncated BPTT over length-3 mini-sequences.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "gst/autodiff.hpp"
#include "gst/checkpoint.hpp"
#include "gst/datasets.hpp"
#include "gst/metrics.hpp"
#include "gst/model.hpp"

namespace gst {

struct LossConfig {
  double lambda = 0.01;
};

struct TrainConfig {
  double lr = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch = 1;
  std::size_t seq_len = 3;
  std::uint64_t seed = 42;
  // 0 keeps every mini-sequence; otherwise a seeded subset per epoch.
  std::size_t max_sequences = 0;
};

struct AugmentConfig {
  double fraction = 0.30;
  double noise = 0.10;
};

struct LossTerms {
  Var total;
  Var mae;
  Var moment;
};

// MAE(pred, truth) + lambda |C_My(pred) - C_My(truth)| with C_My = w . C_P.
LossTerms composite_loss(Tape& t, Var pred, const Tensor& truth, const Tensor& moment_w, double lambda);

class Adam {
 public:
  explicit Adam(const ParamStore& ps, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  // Bias-corrected update from the gradients currently in the store.
  void step(ParamStore& ps);
  std::size_t steps() const noexcept { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct LogRow {
  std::size_t epoch = 0;
  std::size_t sequence = 0;
  double loss = 0.0;
  double mae = 0.0;
  double moment = 0.0;
  double wall = 0.0;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-prediction loss
  std::vector<LogRow> log;
};

using ProgressFn = std::function<void(std::size_t epoch, double loss)>;

// Non-overlapping windows of `seq_len` targets: start frames 3, 3 + L, ...
std::vector<std::size_t> sequence_starts(std::size_t frames, std::size_t seq_len);

TrainResult train_bptt(GstModel& model, std::span<const Dataset> train, const SurfaceMesh& mesh,
                       const TrainConfig& cfg, const LossConfig& loss = {}, const ProgressFn& progress = {});

// Summed loss of one mini-sequence on a fresh tape, for gradient checks.
Var sequence_loss(Tape& t, const GstModel& model, const Dataset& d, std::size_t start, std::size_t seq_len,
                  const Tensor& moment_w, double lambda, LossTerms* last = nullptr);

void write_training_log(const TrainResult& r, const std::filesystem::path& csv);

// Pressure-branch encoder plus decoder trained to reproduce C_P snapshots.
class Autoencoder {
 public:
  Autoencoder(ModelConfig config, std::shared_ptr<const ModelOperators> ops, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  InputScaling& scaling() noexcept { return scaling_; }
  const InputScaling& scaling() const noexcept { return scaling_; }
  std::uint64_t seed() const noexcept { return seed_; }

  Var reconstruct(Tape& t, Var cp) const;

 private:
  ModelConfig config_;
  std::shared_ptr<const ModelOperators> ops_;
  std::uint64_t seed_;
  ParamStore params_;
  Encoder enc_;
  Decoder dec_;
  InputScaling scaling_;
};

// Originals followed by ceil(1.3 N) - N noisy copies; noise std = 0.1 std(snapshot).
std::vector<std::vector<double>> augment_snapshots(const std::vector<std::vector<double>>& snapshots,
                                                   const AugmentConfig& aug, std::uint64_t seed);

// Epoch 0 is the reconstruction MAE before any update; then one entry per epoch.
std::vector<double> pretrain_autoencoder(Autoencoder& ae, const std::vector<std::vector<double>>& snapshots,
                                         const AugmentConfig& aug, const TrainConfig& cfg,
                                         const ProgressFn& progress = {});

double reconstruction_mae(const Autoencoder& ae, const std::vector<std::vector<double>>& snapshots);

// Copies the decoder (and, for ARMAX, the pressure encoder) into the model by name.
std::size_t transfer_autoencoder(const ParamStore& ae, GstModel& model);

}  // namespace gst
