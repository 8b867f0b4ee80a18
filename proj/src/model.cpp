#include "gst/model.hpp"

#include <algorithm>
#include <cmath>

#include "gst/binary_io.hpp"
#include "gst/error.hpp"

namespace gst {
namespace {

constexpr std::size_t kFullLevel0[] = {256, 224, 96};
constexpr std::size_t kFullLevel1 = 64;
constexpr std::size_t kFullLatent = 368;

std::size_t scaled(std::size_t w, int divisor) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(w) / divisor)));
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
  }
  return "?";
}

Activation activation_from_name(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  fail_config("unknown activation '" + s + "'");
}

struct FrameValues {
  Tensor latent, skip0, skip1;
};

FrameValues values_of(const Tape& t, const EncodedFrame& f) {
  return {t.value(f.latent), t.value(f.skip0), t.value(f.skip1)};
}

EncodedFrame as_constants(Tape& t, const FrameValues& v) {
  return {t.constant(v.latent), t.constant(v.skip0), t.constant(v.skip1)};
}

}  // namespace

std::string to_string(TemporalKind k) {
  switch (k) {
    case TemporalKind::kGru: return "gru";
    case TemporalKind::kLstm: return "lstm";
    case TemporalKind::kAttn: return "attn";
    case TemporalKind::kStgcn: return "stgcn";
  }
  return "?";
}

TemporalKind temporal_kind_from_string(const std::string& s) {
  if (s == "gru") return TemporalKind::kGru;
  if (s == "lstm") return TemporalKind::kLstm;
  if (s == "attn") return TemporalKind::kAttn;
  if (s == "stgcn") return TemporalKind::kStgcn;
  fail_config("unknown temporal layer '" + s + "' (expected gru, lstm, attn or stgcn)");
}

ModelConfig scaled_config(int divisor, bool armax, TemporalKind kind) {
  if (divisor < 1) fail_config("width divisor must be >= 1");
  ModelConfig c;
  c.level0_widths.clear();
  for (std::size_t w : kFullLevel0) c.level0_widths.push_back(scaled(w, divisor));
  c.level1_width = scaled(kFullLevel1, divisor);
  c.latent = scaled(kFullLatent, divisor);
  c.armax = armax;
  c.temporal = kind;
  if (divisor == 1 && kind == TemporalKind::kStgcn) {
    c.stgcn_conv_width = armax ? 969 : 289;
    c.stgcn_mix_width = armax ? 1006 : 670;
  }
  return c;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"level0_widths", c.level0_widths},
          {"level1_width", c.level1_width},
          {"latent", c.latent},
          {"temporal", to_string(c.temporal)},
          {"armax", c.armax},
          {"skip", c.skip},
          {"cheb_order", c.cheb_order},
          {"attn_width", c.attn_width},
          {"stgcn_conv_width", c.stgcn_conv_width},
          {"stgcn_mix_width", c.stgcn_mix_width},
          {"hidden_activation", activation_name(c.hidden_act)}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.level0_widths = j.at("level0_widths").get<std::vector<std::size_t>>();
    c.level1_width = j.at("level1_width");
    c.latent = j.at("latent");
    c.temporal = temporal_kind_from_string(j.at("temporal"));
    c.armax = j.at("armax");
    c.skip = j.at("skip");
    c.cheb_order = j.at("cheb_order");
    c.attn_width = j.at("attn_width");
    c.stgcn_conv_width = j.at("stgcn_conv_width");
    c.stgcn_mix_width = j.at("stgcn_mix_width");
    c.hidden_act = activation_from_name(j.at("hidden_activation"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("malformed model config: ") + e.what());
  }
}

std::string config_hash(const ModelConfig& c) { return io::fnv1a_hex(to_json(c).dump()); }

InputScaling fit_scaling(const SurfaceMesh& mesh, std::span<const Dataset> train) {
  if (train.empty()) fail_config("input scaling needs at least one training dataset");
  InputScaling s;
  std::array<double, kMotionChannels + 1> sum{}, sq{};
  std::array<double, kMotionChannels + 1> count{};
  auto add = [&](std::size_t ch, double v) {
    sum[ch] += v;
    sq[ch] += v * v;
    count[ch] += 1.0;
  };
  for (const Vec3& p : mesh.points())
    for (std::size_t c = 0; c < 3; ++c) add(c, p[c]);
  for (const Dataset& d : train) {
    for (const MotionSample& m : d.motion) {
      const double v[5] = {m.theta, m.dtheta, m.ddtheta, m.dxi, m.ddxi};
      for (std::size_t c = 0; c < 5; ++c) add(3 + c, v[c]);
    }
    for (const auto& f : d.cp)
      for (double v : f) add(kMotionChannels, v);
  }
  for (std::size_t c = 0; c <= kMotionChannels; ++c) {
    s.mean[c] = sum[c] / count[c];
    const double var = std::max(0.0, sq[c] / count[c] - s.mean[c] * s.mean[c]);
    s.stddev[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

nlohmann::json to_json(const InputScaling& s) { return {{"mean", s.mean}, {"stddev", s.stddev}}; }

InputScaling input_scaling_from_json(const nlohmann::json& j) {
  InputScaling s;
  try {
    s.mean = j.at("mean").get<std::array<double, kMotionChannels + 1>>();
    s.stddev = j.at("stddev").get<std::array<double, kMotionChannels + 1>>();
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("malformed input scaling: ") + e.what());
  }
  return s;
}

std::shared_ptr<const ModelOperators> make_operators(const SurfaceMesh& mesh, const Graph& base,
                                                     const ReductionHierarchy& h, int cheb_order) {
  if (h.levels.size() != 2) fail_config("the model needs a two-level reduction hierarchy");
  if (h.base_nodes != mesh.size() || base.size() != mesh.size())
    fail_config("hierarchy, graph and mesh disagree on the node count");
  auto ops = std::make_shared<ModelOperators>();
  ops->points = mesh.points();
  ops->gcn[0] = gcn_normalize(base).matrix;
  ops->gcn[1] = gcn_normalize(h.levels[0].graph).matrix;
  ops->gcn[2] = gcn_normalize(h.levels[1].graph).matrix;
  ops->cheb = make_cheb_operator(h.levels[1].graph, cheb_order);
  for (std::size_t l = 0; l < 2; ++l) {
    ops->pool[l] = h.levels[l].pool;
    ops->unpool[l] = h.levels[l].unpool;
  }
  for (std::size_t l = 0; l < 3; ++l) ops->nodes[l] = h.level_size(l);
  return ops;
}

Encoder make_encoder(ParamStore& ps, const std::string& prefix, std::size_t in, const ModelConfig& c, Rng& rng) {
  if (c.level0_widths.empty()) fail_config("encoder needs at least one level-0 width");
  Encoder e;
  std::size_t w = in;
  for (std::size_t i = 0; i < c.level0_widths.size(); ++i) {
    e.level0.push_back(make_gcn_layer(ps, prefix + ".l0." + std::to_string(i), w, c.level0_widths[i], c.hidden_act, rng));
    w = c.level0_widths[i];
  }
  e.level1 = make_gcn_layer(ps, prefix + ".l1", w, c.level1_width, c.hidden_act, rng);
  e.level2 = make_gcn_layer(ps, prefix + ".l2", c.level1_width, c.latent, c.hidden_act, rng);
  return e;
}

Decoder make_decoder(ParamStore& ps, const std::string& prefix, const ModelConfig& c, Rng& rng) {
  Decoder d;
  d.level2 = make_gcn_layer(ps, prefix + ".l2", c.latent, c.latent, c.hidden_act, rng);
  d.level1 = make_gcn_layer(ps, prefix + ".l1", c.latent, c.level1_width, c.hidden_act, rng);
  std::size_t w = c.level1_width;
  for (std::size_t i = c.level0_widths.size(); i-- > 0;) {
    d.level0.push_back(make_gcn_layer(ps, prefix + ".l0." + std::to_string(i), w, c.level0_widths[i], c.hidden_act, rng));
    w = c.level0_widths[i];
  }
  d.out = make_gcn_layer(ps, prefix + ".out", w, 1, Activation::kIdentity, rng);
  return d;
}

ModelParams register_model(ParamStore& ps, const ModelConfig& c, Rng& rng) {
  if (c.cheb_order < 1) fail_config("Chebyshev order must be >= 1");
  ModelParams m;
  m.enc_a = make_encoder(ps, "encA", kMotionChannels, c, rng);
  if (c.armax) m.enc_b = make_encoder(ps, "encB", 1, c, rng);
  m.temporal.kind = c.temporal;
  const std::size_t in = c.temporal_in();
  switch (c.temporal) {
    case TemporalKind::kGru:
      m.temporal.gru = make_gcgru_cell(ps, "gru", in, c.latent, c.cheb_order, rng);
      break;
    case TemporalKind::kLstm:
      m.temporal.lstm = make_gclstm_cell(ps, "lstm", in, c.latent, c.cheb_order, rng);
      break;
    case TemporalKind::kAttn:
      m.temporal.gru = make_gcgru_cell(ps, "gru", in, c.latent, c.cheb_order, rng);
      m.temporal.attn = make_attention_head(ps, "attn", c.latent, c.attn_width, rng);
      break;
    case TemporalKind::kStgcn: {
      const std::size_t conv = c.stgcn_conv_width ? c.stgcn_conv_width : c.latent;
      const std::size_t mix = c.stgcn_mix_width ? c.stgcn_mix_width : c.latent;
      m.temporal.stgcn = make_stgcn_layer(ps, "stgcn", in, conv, mix, c.latent, rng);
      break;
    }
  }
  m.dec = make_decoder(ps, "dec", c, rng);
  return m;
}

std::size_t count_parameters(const ModelConfig& c) {
  ParamStore ps;
  Rng rng(0);
  register_model(ps, c, rng);
  return ps.scalar_count();
}

Var gcn_stack(Tape& t, std::span<const GcnLayer> layers, const SparseMatrix& op, Var h) {
  for (const GcnLayer& l : layers) h = gcn_forward(t, l, op, h);
  return h;
}

EncodedFrame encode(Tape& t, const Encoder& e, const ModelOperators& ops, Var input) {
  EncodedFrame f;
  f.skip0 = gcn_stack(t, e.level0, ops.gcn[0], input);
  f.skip1 = gcn_forward(t, e.level1, ops.gcn[1], spmm(t, ops.pool[0], f.skip0));
  f.latent = gcn_forward(t, e.level2, ops.gcn[2], spmm(t, ops.pool[1], f.skip1));
  return f;
}

Var decode(Tape& t, const Decoder& d, const ModelOperators& ops, Var latent, Var skip0, Var skip1) {
  Var h = gcn_forward(t, d.level2, ops.gcn[2], latent);
  h = gcn_forward(t, d.level1, ops.gcn[1], spmm(t, ops.unpool[1], h));
  if (skip1.valid()) h = add(t, h, skip1);
  h = spmm(t, ops.unpool[0], h);
  for (std::size_t i = 0; i < d.level0.size(); ++i) {
    h = gcn_forward(t, d.level0[i], ops.gcn[0], h);
    if (i == 0 && skip0.valid()) h = add(t, h, skip0);
  }
  return gcn_forward(t, d.out, ops.gcn[0], h);
}

GstModel::GstModel(ModelConfig config, std::shared_ptr<const ModelOperators> ops, std::uint64_t seed)
    : config_(std::move(config)), ops_(std::move(ops)), seed_(seed) {
  if (!ops_) fail_config("model needs graph operators");
  if (ops_->cheb.order != config_.cheb_order)
    fail_config("Chebyshev operator order " + std::to_string(ops_->cheb.order) + " does not match config order " +
                std::to_string(config_.cheb_order));
  Rng rng(seed_);
  layout_ = register_model(params_, config_, rng);
}

Tensor GstModel::motion_features(const MotionSample& m) const {
  const std::size_t n = nodes();
  Tensor f = Tensor::zeros(n, kMotionChannels);
  const double motion[5] = {m.theta, m.dtheta, m.ddtheta, m.dxi, m.ddxi};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) f(i, c) = (ops_->points[i][c] - scaling_.mean[c]) / scaling_.stddev[c];
    for (std::size_t c = 0; c < 5; ++c) f(i, 3 + c) = (motion[c] - scaling_.mean[3 + c]) / scaling_.stddev[3 + c];
  }
  return f;
}

EncodedFrame GstModel::encode_motion(Tape& t, const MotionSample& m) const {
  return encode(t, layout_.enc_a, *ops_, t.constant(motion_features(m)));
}

EncodedFrame GstModel::encode_pressure(Tape& t, Var cp) const {
  if (!layout_.enc_b) fail_config("feedforward model has no pressure encoder");
  if (t.value(cp).rows() != nodes() || t.value(cp).cols() != 1)
    fail_config("pressure frame must be " + std::to_string(nodes()) + " x 1, got " + t.value(cp).shape_string());
  const double mu = scaling_.mean[kMotionChannels], sd = scaling_.stddev[kMotionChannels];
  return encode(t, *layout_.enc_b, *ops_, scale(t, add_scalar(t, cp, -mu), 1.0 / sd));
}

Var GstModel::temporal_forward(Tape& t, std::span<const Var> latents) const {
  const TemporalLayer& tl = layout_.temporal;
  const std::size_t n2 = t.value(latents[0]).rows();
  switch (tl.kind) {
    case TemporalKind::kGru: {
      Var h = t.constant(Tensor::zeros(n2, config_.latent));
      for (Var x : latents) h = gcgru_step(t, *tl.gru, ops_->cheb, x, h);
      return h;
    }
    case TemporalKind::kLstm: {
      LstmState s{t.constant(Tensor::zeros(n2, config_.latent)), t.constant(Tensor::zeros(n2, config_.latent))};
      for (Var x : latents) s = gclstm_step(t, *tl.lstm, ops_->cheb, x, s);
      return s.h;
    }
    case TemporalKind::kAttn: {
      std::vector<Var> states;
      Var h = t.constant(Tensor::zeros(n2, config_.latent));
      for (Var x : latents) {
        h = gcgru_step(t, *tl.gru, ops_->cheb, x, h);
        states.push_back(h);
      }
      return attention_context(t, *tl.attn, states);
    }
    case TemporalKind::kStgcn:
      return stgcn_layer(t, *tl.stgcn, ops_->gcn[2], latents);
  }
  fail_config("unknown temporal layer");
}

Var GstModel::predict(Tape& t, std::span<const EncodedFrame> motion, std::span<const EncodedFrame> pressure) const {
  if (motion.size() != kWindow) fail_config("prediction needs exactly 3 motion frames");
  if (config_.armax && pressure.size() != kWindow) fail_config("ARMAX prediction needs 3 pressure frames");
  if (!config_.armax && !pressure.empty()) fail_config("feedforward prediction takes no pressure frames");
  std::vector<Var> latents;
  for (std::size_t k = 0; k < kWindow; ++k) {
    if (config_.armax) {
      const Var parts[2] = {motion[k].latent, pressure[k].latent};
      latents.push_back(concat_cols(t, parts));
    } else {
      latents.push_back(motion[k].latent);
    }
  }
  const Var z = temporal_forward(t, latents);
  Var skip0, skip1;
  if (config_.skip) {
    skip0 = motion.back().skip0;
    skip1 = motion.back().skip1;
    if (config_.armax) {
      skip0 = add(t, skip0, pressure.back().skip0);
      skip1 = add(t, skip1, pressure.back().skip1);
    }
  }
  const Var out = decode(t, layout_.dec, *ops_, z, skip0, skip1);
  return add_scalar(t, scale(t, out, scaling_.stddev[kMotionChannels]), scaling_.mean[kMotionChannels]);
}

Tensor GstModel::predict_values(std::span<const MotionSample> motion,
                                std::span<const std::vector<double>> pressure) const {
  Tape t(params_);
  std::vector<EncodedFrame> mf, pf;
  for (const MotionSample& m : motion) mf.push_back(encode_motion(t, m));
  for (const auto& p : pressure) pf.push_back(encode_pressure(t, t.constant(to_column(p))));
  return t.value(predict(t, mf, pf));
}

std::size_t teacher_switch_frame(std::size_t frames, double teacher_fraction) {
  if (!(teacher_fraction >= 0.0 && teacher_fraction <= 1.0)) fail_config("teacher fraction must lie in [0, 1]");
  const auto s = static_cast<std::size_t>(std::llround(teacher_fraction * static_cast<double>(frames)));
  return std::clamp<std::size_t>(s, kWindow, frames);
}

FieldSeries rollout_feedforward(const GstModel& m, const Dataset& d) {
  if (d.frames() <= kWindow) fail_config("rollout needs more than 3 frames");
  std::vector<FrameValues> enc;
  enc.reserve(d.frames() - 1);
  for (std::size_t f = 0; f + 1 < d.frames(); ++f) {
    Tape t(m.params());
    enc.push_back(values_of(t, m.encode_motion(t, d.motion[f])));
  }
  FieldSeries out;
  for (std::size_t f = kWindow; f < d.frames(); ++f) {
    Tape t(m.params());
    const EncodedFrame w[3] = {as_constants(t, enc[f - 3]), as_constants(t, enc[f - 2]), as_constants(t, enc[f - 1])};
    out.push_back(to_vector(t.value(m.predict(t, w))));
  }
  return out;
}

FieldSeries rollout_armax(const GstModel& m, const Dataset& d, double teacher_fraction) {
  if (!m.config().armax) fail_config("ARMAX rollout needs an ARMAX model");
  if (d.frames() <= kWindow) fail_config("rollout needs at least 3 warm-up frames and one target");
  const std::size_t sw = teacher_switch_frame(d.frames(), teacher_fraction);
  std::vector<FrameValues> motion, pressure;
  for (std::size_t f = 0; f + 1 < d.frames(); ++f) {
    Tape t(m.params());
    motion.push_back(values_of(t, m.encode_motion(t, d.motion[f])));
  }
  auto encode_cp = [&](std::span<const double> cp) {
    Tape t(m.params());
    return values_of(t, m.encode_pressure(t, t.constant(to_column(cp))));
  };
  for (std::size_t f = 0; f < sw && f + 1 < d.frames(); ++f) pressure.push_back(encode_cp(d.cp[f]));
  FieldSeries out;
  for (std::size_t f = kWindow; f < d.frames(); ++f) {
    Tape t(m.params());
    EncodedFrame mw[3], pw[3];
    for (std::size_t k = 0; k < 3; ++k) {
      mw[k] = as_constants(t, motion[f - 3 + k]);
      pw[k] = as_constants(t, pressure[f - 3 + k]);
    }
    out.push_back(to_vector(t.value(m.predict(t, mw, pw))));
    if (f >= sw && f + 1 < d.frames()) pressure.push_back(encode_cp(out.back()));
  }
  return out;
}

std::vector<double> to_vector(const Tensor& column) { return {column.values().begin(), column.values().end()}; }

Tensor to_column(std::span<const double> v) { return Tensor::column(v); }

}  // namespace gst
