#pragma once

// Differentiable graph layers: the plain GCN layer, Chebyshev-filtered GRU and
// LSTM cells, a per-node temporal attention head, and the STGCN sandwich.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gst/autodiff.hpp"
#include "gst/graph.hpp"
#include "gst/rng.hpp"

namespace gst {

// uniform(-bound, bound) draws, row-major.
Tensor uniform_init(Rng& rng, std::size_t rows, std::size_t cols, double bound);
// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor fan_in_init(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in);
// uniform(-sqrt(6 / (rows + cols)), sqrt(6 / (rows + cols))).
Tensor glorot_init(Rng& rng, std::size_t rows, std::size_t cols);

struct GcnLayer {
  ParamId weight = 0;  // in x out
  ParamId bias = 0;    // 1 x out
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::kIdentity;
};

GcnLayer make_gcn_layer(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, Activation act,
                        Rng& rng);
// act(op * H * W + b); `op` must outlive the tape.
Var gcn_forward(Tape& t, const GcnLayer& layer, const SparseMatrix& op, Var h);

// K coefficient matrices (in x out each) stacked vertically: W = [W_0; ...; W_{K-1}].
struct ChebFilter {
  ParamId weight = 0;
  std::size_t in = 0;
  std::size_t out = 0;
  int order = 1;
};

ChebFilter make_cheb_filter(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, int order,
                            Rng& rng);
// [T_0 x | T_1 x | ... | T_{K-1} x], n x (K * in).
Var cheb_features(Tape& t, const ChebOperator& op, Var x);
// sum_k T_k(L) x W_k from precomputed cheb_features.
Var cheb_filter(Tape& t, const ChebFilter& f, Var features);

struct GcGruCell {
  ChebFilter wxz, uhz, wxr, uhr, wxh, uhh;
  ParamId bz = 0, br = 0, bh = 0;
  std::size_t in = 0;
  std::size_t hidden = 0;
};

GcGruCell make_gcgru_cell(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hidden, int order,
                          Rng& rng);
Var gcgru_step(Tape& t, const GcGruCell& cell, const ChebOperator& op, Var x, Var h_prev);

struct GcLstmCell {
  ChebFilter wxi, whi, wxf, whf, wxc, whc, wxo, who;
  ParamId wci = 0, wcf = 0, wco = 0;  // peepholes, 1 x hidden
  ParamId bi = 0, bf = 0, bc = 0, bo = 0;
  std::size_t in = 0;
  std::size_t hidden = 0;
};

struct LstmState {
  Var h;
  Var c;
};

GcLstmCell make_gclstm_cell(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hidden, int order,
                            Rng& rng);
LstmState gclstm_step(Tape& t, const GcLstmCell& cell, const ChebOperator& op, Var x, LstmState prev);

// e_t = w2 (w1 h_t + b1) + b2 per node, alpha = softmax over t.
struct AttentionHead {
  ParamId w1 = 0;  // hidden x width
  ParamId b1 = 0;  // 1 x width
  ParamId w2 = 0;  // width x 1
  ParamId b2 = 0;  // 1 x 1
  std::size_t hidden = 0;
  std::size_t width = 0;
};

AttentionHead make_attention_head(ParamStore& ps, const std::string& name, std::size_t hidden, std::size_t width,
                                  Rng& rng);
// n x T weights; row i is node i's distribution over the states.
Var attention_weights(Tape& t, const AttentionHead& head, std::span<const Var> states);
Var attention_context(Tape& t, const AttentionHead& head, std::span<const Var> states);

// Gamma in R^{Kt x C_i x 2 C_o}, stored as (Kt * C_i) x (2 C_o), no bias.
struct TemporalConv {
  ParamId gamma = 0;
  std::size_t kt = 1;
  std::size_t in = 0;
  std::size_t out = 0;
};

TemporalConv make_temporal_conv(ParamStore& ps, const std::string& name, std::size_t kt, std::size_t in,
                                std::size_t out, Rng& rng);
// Valid causal convolution over frames followed by P * sigmoid(Q); returns M - Kt + 1 frames.
std::vector<Var> temporal_conv(Tape& t, const TemporalConv& conv, std::span<const Var> frames);

// Temporal conv (Kt = 2) -> spatial GCN mix with ReLU -> temporal conv (Kt = 2).
struct StgcnLayer {
  TemporalConv tc1;
  ParamId spatial = 0;  // conv_width x mix_width
  TemporalConv tc2;
  std::size_t in = 0;
  std::size_t conv_width = 0;
  std::size_t mix_width = 0;
  std::size_t out = 0;
};

StgcnLayer make_stgcn_layer(ParamStore& ps, const std::string& name, std::size_t in, std::size_t conv_width,
                            std::size_t mix_width, std::size_t out, Rng& rng);
// Three input frames collapse to one n x out frame.
Var stgcn_layer(Tape& t, const StgcnLayer& layer, const SparseMatrix& gcn_op, std::span<const Var> window);

}  // namespace gst
