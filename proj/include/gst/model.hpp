#pragma once

// The spatio-temporal graph autoencoder: per-frame GCN encoders with two MWLS
// pooling stages, a temporal layer on the coarsest graph, and a mirrored GCN
// decoder with additive skip connections.

#include <array>
#include <cstdint>
#include <json.hpp>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gst/autodiff.hpp"
#include "gst/datasets.hpp"
#include "gst/graph.hpp"
#include "gst/layers.hpp"
#include "gst/metrics.hpp"
#include "gst/reduction.hpp"

namespace gst {

enum class TemporalKind { kGru, kLstm, kAttn, kStgcn };

std::string to_string(TemporalKind k);
TemporalKind temporal_kind_from_string(const std::string& s);

inline constexpr std::size_t kMotionChannels = 8;  // x, y, z, theta, theta', theta'', xi', xi''
inline constexpr std::size_t kWindow = 3;

struct ModelConfig {
  std::vector<std::size_t> level0_widths{16, 14, 6};  // GCN widths before the first pooling
  std::size_t level1_width = 4;
  std::size_t latent = 23;
  TemporalKind temporal = TemporalKind::kStgcn;
  bool armax = false;
  bool skip = true;
  int cheb_order = 3;
  std::size_t attn_width = 16;
  std::size_t stgcn_conv_width = 0;  // 0 means the latent width
  std::size_t stgcn_mix_width = 0;
  Activation hidden_act = Activation::kTanh;

  std::size_t temporal_in() const { return armax ? 2 * latent : latent; }
};

// Full-size widths (256, 224, 96, 64, 368) divided by `divisor`, rounded, at least 1.
// Divisor 1 also selects the full-size STGCN internal widths.
ModelConfig scaled_config(int divisor, bool armax, TemporalKind kind);

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);
std::string config_hash(const ModelConfig& c);

// Per-channel standardization of the inputs: 8 motion channels then C_P.
struct InputScaling {
  std::array<double, kMotionChannels + 1> mean{};
  std::array<double, kMotionChannels + 1> stddev{1, 1, 1, 1, 1, 1, 1, 1, 1};
};

InputScaling fit_scaling(const SurfaceMesh& mesh, std::span<const Dataset> train);
nlohmann::json to_json(const InputScaling& s);
InputScaling input_scaling_from_json(const nlohmann::json& j);

// Graph operators of the three levels, shared read-only by every tape.
struct ModelOperators {
  std::vector<Vec3> points;                // level 0 coordinates
  std::array<SparseMatrix, 3> gcn;         // normalized adjacency per level
  ChebOperator cheb;                       // level 2 scaled Laplacian
  std::array<SparseMatrix, 2> pool;        // level l -> l+1
  std::array<SparseMatrix, 2> unpool;      // level l+1 -> l
  std::array<std::size_t, 3> nodes{};
};

std::shared_ptr<const ModelOperators> make_operators(const SurfaceMesh& mesh, const Graph& base,
                                                     const ReductionHierarchy& h, int cheb_order);

struct Encoder {
  std::vector<GcnLayer> level0;
  GcnLayer level1;
  GcnLayer level2;
};

struct Decoder {
  GcnLayer level2;
  GcnLayer level1;
  std::vector<GcnLayer> level0;
  GcnLayer out;
};

struct TemporalLayer {
  TemporalKind kind = TemporalKind::kStgcn;
  std::optional<GcGruCell> gru;
  std::optional<GcLstmCell> lstm;
  std::optional<AttentionHead> attn;
  std::optional<StgcnLayer> stgcn;
};

// Parameter layout; registration order fixes the checkpoint order.
struct ModelParams {
  Encoder enc_a;                 // motion branch
  std::optional<Encoder> enc_b;  // pressure branch, ARMAX only
  TemporalLayer temporal;
  Decoder dec;
};

Encoder make_encoder(ParamStore& ps, const std::string& prefix, std::size_t in, const ModelConfig& c, Rng& rng);
Decoder make_decoder(ParamStore& ps, const std::string& prefix, const ModelConfig& c, Rng& rng);
ModelParams register_model(ParamStore& ps, const ModelConfig& c, Rng& rng);

// Trainable scalar count for a configuration (independent of node counts).
std::size_t count_parameters(const ModelConfig& c);

struct EncodedFrame {
  Var latent;  // level 2, latent wide
  Var skip0;   // level 0 activation before the first pooling
  Var skip1;   // level 1 activation before the second pooling
};

Var gcn_stack(Tape& t, std::span<const GcnLayer> layers, const SparseMatrix& op, Var h);
EncodedFrame encode(Tape& t, const Encoder& e, const ModelOperators& ops, Var input);
// Decodes a level-2 latent; skips may be invalid Vars when disabled.
Var decode(Tape& t, const Decoder& d, const ModelOperators& ops, Var latent, Var skip0, Var skip1);

class GstModel {
 public:
  GstModel(ModelConfig config, std::shared_ptr<const ModelOperators> ops, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const ModelOperators& ops() const noexcept { return *ops_; }
  std::shared_ptr<const ModelOperators> ops_ptr() const noexcept { return ops_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  const ModelParams& layout() const noexcept { return layout_; }
  InputScaling& scaling() noexcept { return scaling_; }
  const InputScaling& scaling() const noexcept { return scaling_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t nodes() const noexcept { return ops_->nodes[0]; }

  // Standardized n x 8 motion features for one frame.
  Tensor motion_features(const MotionSample& m) const;
  EncodedFrame encode_motion(Tape& t, const MotionSample& m) const;
  // `cp` is the raw n x 1 field (a tape value, so fed-back predictions stay differentiable).
  EncodedFrame encode_pressure(Tape& t, Var cp) const;

  // Raw C_P (n x 1) at t from frames t-3, t-2, t-1 (oldest first).
  Var predict(Tape& t, std::span<const EncodedFrame> motion, std::span<const EncodedFrame> pressure = {}) const;
  Var temporal_forward(Tape& t, std::span<const Var> latents) const;

  // Parameter-free tape (the model's parameters enter as constants).
  Tensor predict_values(std::span<const MotionSample> motion, std::span<const std::vector<double>> pressure) const;

 private:
  ModelConfig config_;
  std::shared_ptr<const ModelOperators> ops_;
  std::uint64_t seed_;
  ParamStore params_;
  ModelParams layout_;
  InputScaling scaling_;
};

// Frame index at which an ARMAX rollout stops reading ground-truth C_P.
std::size_t teacher_switch_frame(std::size_t frames, double teacher_fraction);

// Predictions for frames 3 .. T-1.
FieldSeries rollout_feedforward(const GstModel& m, const Dataset& d);
// Frames before teacher_switch_frame feed ground truth, later frames feed predictions.
FieldSeries rollout_armax(const GstModel& m, const Dataset& d, double teacher_fraction);

std::vector<double> to_vector(const Tensor& column);
Tensor to_column(std::span<const double> v);

}  // namespace gst
