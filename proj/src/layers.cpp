#include "gst/layers.hpp"

#include <cmath>

#include "gst/error.hpp"

namespace gst {
namespace {

ParamId zero_bias(ParamStore& ps, const std::string& name, std::size_t width) {
  return ps.add(name, Tensor::zeros(1, width));
}

void require_width(bool ok, const std::string& what) {
  if (!ok) fail_config(what);
}

}  // namespace

Tensor uniform_init(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
  Tensor w = Tensor::zeros(rows, cols);
  for (double& v : w.storage()) v = rng.uniform(-bound, bound);
  return w;
}

Tensor fan_in_init(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
  return uniform_init(rng, rows, cols, 1.0 / std::sqrt(static_cast<double>(fan_in)));
}

Tensor glorot_init(Rng& rng, std::size_t rows, std::size_t cols) {
  return uniform_init(rng, rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)));
}

GcnLayer make_gcn_layer(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, Activation act,
                        Rng& rng) {
  GcnLayer l;
  l.in = in;
  l.out = out;
  l.act = act;
  l.weight = ps.add(name + ".W", glorot_init(rng, in, out));
  l.bias = zero_bias(ps, name + ".b", out);
  return l;
}

Var gcn_forward(Tape& t, const GcnLayer& layer, const SparseMatrix& op, Var h) {
  const Tensor& hv = t.value(h);
  if (hv.cols() != layer.in || hv.rows() != op.cols())
    fail_config("gcn_forward: input " + hv.shape_string() + " does not fit layer " + std::to_string(layer.in) +
                "->" + std::to_string(layer.out) + " on " + std::to_string(op.cols()) + " nodes");
  const Var w = t.param(layer.weight);
  // Multiply by the narrower side first.
  const Var mixed = layer.out < layer.in ? spmm(t, op, matmul(t, h, w)) : matmul(t, spmm(t, op, h), w);
  return activate(t, add_bias(t, mixed, t.param(layer.bias)), layer.act);
}

ChebFilter make_cheb_filter(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, int order,
                            Rng& rng) {
  require_width(order >= 1, "Chebyshev order must be >= 1");
  ChebFilter f;
  f.in = in;
  f.out = out;
  f.order = order;
  const std::size_t rows = static_cast<std::size_t>(order) * in;
  f.weight = ps.add(name, fan_in_init(rng, rows, out, rows));
  return f;
}

Var cheb_features(Tape& t, const ChebOperator& op, Var x) {
  const std::vector<Var> basis = cheb_basis(t, op, x);
  return basis.size() == 1 ? basis[0] : concat_cols(t, basis);
}

Var cheb_filter(Tape& t, const ChebFilter& f, Var features) {
  require_width(t.value(features).cols() == f.in * static_cast<std::size_t>(f.order),
                "cheb_filter: feature width " + std::to_string(t.value(features).cols()) + " does not match " +
                    std::to_string(f.order) + " x " + std::to_string(f.in));
  return matmul(t, features, t.param(f.weight));
}

GcGruCell make_gcgru_cell(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hidden, int order,
                          Rng& rng) {
  GcGruCell c;
  c.in = in;
  c.hidden = hidden;
  c.wxz = make_cheb_filter(ps, name + ".Wxz", in, hidden, order, rng);
  c.uhz = make_cheb_filter(ps, name + ".Uhz", hidden, hidden, order, rng);
  c.wxr = make_cheb_filter(ps, name + ".Wxr", in, hidden, order, rng);
  c.uhr = make_cheb_filter(ps, name + ".Uhr", hidden, hidden, order, rng);
  c.wxh = make_cheb_filter(ps, name + ".Wxh", in, hidden, order, rng);
  c.uhh = make_cheb_filter(ps, name + ".Uhh", hidden, hidden, order, rng);
  c.bz = zero_bias(ps, name + ".bz", hidden);
  c.br = zero_bias(ps, name + ".br", hidden);
  c.bh = zero_bias(ps, name + ".bh", hidden);
  return c;
}

Var gcgru_step(Tape& t, const GcGruCell& cell, const ChebOperator& op, Var x, Var h_prev) {
  require_width(t.value(x).cols() == cell.in && t.value(h_prev).cols() == cell.hidden,
                "gcgru_step: input or state width mismatch");
  const Var fx = cheb_features(t, op, x);
  const Var fh = cheb_features(t, op, h_prev);
  const Var z = sigmoid(t, add_bias(t, add(t, cheb_filter(t, cell.wxz, fx), cheb_filter(t, cell.uhz, fh)),
                                    t.param(cell.bz)));
  const Var r = sigmoid(t, add_bias(t, add(t, cheb_filter(t, cell.wxr, fx), cheb_filter(t, cell.uhr, fh)),
                                    t.param(cell.br)));
  const Var frh = cheb_features(t, op, mul(t, r, h_prev));
  const Var cand = tanh(t, add_bias(t, add(t, cheb_filter(t, cell.wxh, fx), cheb_filter(t, cell.uhh, frh)),
                                    t.param(cell.bh)));
  return add(t, mul(t, one_minus(t, z), h_prev), mul(t, z, cand));
}

GcLstmCell make_gclstm_cell(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hidden, int order,
                            Rng& rng) {
  GcLstmCell c;
  c.in = in;
  c.hidden = hidden;
  c.wxi = make_cheb_filter(ps, name + ".Wxi", in, hidden, order, rng);
  c.whi = make_cheb_filter(ps, name + ".Whi", hidden, hidden, order, rng);
  c.wxf = make_cheb_filter(ps, name + ".Wxf", in, hidden, order, rng);
  c.whf = make_cheb_filter(ps, name + ".Whf", hidden, hidden, order, rng);
  c.wxc = make_cheb_filter(ps, name + ".Wxc", in, hidden, order, rng);
  c.whc = make_cheb_filter(ps, name + ".Whc", hidden, hidden, order, rng);
  c.wxo = make_cheb_filter(ps, name + ".Wxo", in, hidden, order, rng);
  c.who = make_cheb_filter(ps, name + ".Who", hidden, hidden, order, rng);
  c.wci = ps.add(name + ".wci", fan_in_init(rng, 1, hidden, hidden));
  c.wcf = ps.add(name + ".wcf", fan_in_init(rng, 1, hidden, hidden));
  c.wco = ps.add(name + ".wco", fan_in_init(rng, 1, hidden, hidden));
  c.bi = zero_bias(ps, name + ".bi", hidden);
  c.bf = zero_bias(ps, name + ".bf", hidden);
  c.bc = zero_bias(ps, name + ".bc", hidden);
  c.bo = zero_bias(ps, name + ".bo", hidden);
  return c;
}

LstmState gclstm_step(Tape& t, const GcLstmCell& cell, const ChebOperator& op, Var x, LstmState prev) {
  require_width(t.value(x).cols() == cell.in && t.value(prev.h).cols() == cell.hidden &&
                    t.value(prev.c).cols() == cell.hidden,
                "gclstm_step: input or state width mismatch");
  const Var fx = cheb_features(t, op, x);
  const Var fh = cheb_features(t, op, prev.h);
  auto gate_in = [&](const ChebFilter& wx, const ChebFilter& wh, ParamId b) {
    return add_bias(t, add(t, cheb_filter(t, wx, fx), cheb_filter(t, wh, fh)), t.param(b));
  };
  const Var i = sigmoid(t, add(t, gate_in(cell.wxi, cell.whi, cell.bi), mul_row(t, prev.c, t.param(cell.wci))));
  const Var f = sigmoid(t, add(t, gate_in(cell.wxf, cell.whf, cell.bf), mul_row(t, prev.c, t.param(cell.wcf))));
  const Var c = add(t, mul(t, f, prev.c), mul(t, i, tanh(t, gate_in(cell.wxc, cell.whc, cell.bc))));
  const Var o = sigmoid(t, add(t, gate_in(cell.wxo, cell.who, cell.bo), mul_row(t, c, t.param(cell.wco))));
  return {mul(t, o, tanh(t, c)), c};
}

AttentionHead make_attention_head(ParamStore& ps, const std::string& name, std::size_t hidden, std::size_t width,
                                  Rng& rng) {
  AttentionHead a;
  a.hidden = hidden;
  a.width = width;
  a.w1 = ps.add(name + ".w1", fan_in_init(rng, hidden, width, hidden));
  a.b1 = zero_bias(ps, name + ".b1", width);
  a.w2 = ps.add(name + ".w2", fan_in_init(rng, width, 1, width));
  a.b2 = zero_bias(ps, name + ".b2", 1);
  return a;
}

Var attention_weights(Tape& t, const AttentionHead& head, std::span<const Var> states) {
  if (states.empty()) fail_config("attention needs at least one state");
  std::vector<Var> scores;
  scores.reserve(states.size());
  for (Var h : states) {
    require_width(t.value(h).cols() == head.hidden, "attention: state width mismatch");
    const Var inner = add_bias(t, matmul(t, h, t.param(head.w1)), t.param(head.b1));
    scores.push_back(add_bias(t, matmul(t, inner, t.param(head.w2)), t.param(head.b2)));
  }
  const Var e = scores.size() == 1 ? scores[0] : concat_cols(t, scores);
  return softmax(t, e, 1);
}

Var attention_context(Tape& t, const AttentionHead& head, std::span<const Var> states) {
  const Var alpha = attention_weights(t, head, states);
  Var ctx = mul_col(t, states[0], slice_cols(t, alpha, 0, 1));
  for (std::size_t s = 1; s < states.size(); ++s) ctx = add(t, ctx, mul_col(t, states[s], slice_cols(t, alpha, s, s + 1)));
  return ctx;
}

TemporalConv make_temporal_conv(ParamStore& ps, const std::string& name, std::size_t kt, std::size_t in,
                                std::size_t out, Rng& rng) {
  require_width(kt >= 1, "temporal conv needs Kt >= 1");
  TemporalConv c;
  c.kt = kt;
  c.in = in;
  c.out = out;
  c.gamma = ps.add(name + ".Gamma", fan_in_init(rng, kt * in, 2 * out, kt * in));
  return c;
}

std::vector<Var> temporal_conv(Tape& t, const TemporalConv& conv, std::span<const Var> frames) {
  if (frames.size() < conv.kt)
    fail_config("temporal conv: " + std::to_string(frames.size()) + " frames for Kt = " + std::to_string(conv.kt));
  for (Var f : frames) require_width(t.value(f).cols() == conv.in, "temporal conv: channel mismatch");
  const Var gamma = t.param(conv.gamma);
  std::vector<Var> out;
  for (std::size_t j = 0; j + conv.kt <= frames.size(); ++j) {
    const std::span<const Var> taps = frames.subspan(j, conv.kt);
    const Var stacked = conv.kt == 1 ? taps[0] : concat_cols(t, taps);
    const Var pq = matmul(t, stacked, gamma);
    out.push_back(mul(t, slice_cols(t, pq, 0, conv.out), sigmoid(t, slice_cols(t, pq, conv.out, 2 * conv.out))));
  }
  return out;
}

StgcnLayer make_stgcn_layer(ParamStore& ps, const std::string& name, std::size_t in, std::size_t conv_width,
                            std::size_t mix_width, std::size_t out, Rng& rng) {
  StgcnLayer l;
  l.in = in;
  l.conv_width = conv_width;
  l.mix_width = mix_width;
  l.out = out;
  l.tc1 = make_temporal_conv(ps, name + ".tc1", 2, in, conv_width, rng);
  l.spatial = ps.add(name + ".Theta", fan_in_init(rng, conv_width, mix_width, conv_width));
  l.tc2 = make_temporal_conv(ps, name + ".tc2", 2, mix_width, out, rng);
  return l;
}

Var stgcn_layer(Tape& t, const StgcnLayer& layer, const SparseMatrix& gcn_op, std::span<const Var> window) {
  if (window.size() != 3) fail_config("stgcn layer expects a 3-frame window");
  const std::vector<Var> first = temporal_conv(t, layer.tc1, window);
  std::vector<Var> mixed;
  for (Var f : first) mixed.push_back(relu(t, matmul(t, spmm(t, gcn_op, f), t.param(layer.spatial))));
  const std::vector<Var> second = temporal_conv(t, layer.tc2, mixed);
  return second.front();
}

}  // namespace gst
