#pragma once

// Reverse-mode differentiation over rank-2 tensors.
//
// A Tape records every op applied during one forward pass; backward() walks
// the record from the loss back to the leaves in reverse creation order, which
// is a valid reverse topological order because ops can only consume earlier
// nodes. Parameters live in a ParamStore that outlives tapes; each tape binds a
// parameter at most once, so reuse across timesteps accumulates gradients.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gst/sparse.hpp"
#include "gst/tensor.hpp"

namespace gst {

using ParamId = std::size_t;

class ParamStore {
 public:
  ParamId add(std::string name, Tensor init);

  std::size_t size() const noexcept { return values_.size(); }
  std::size_t scalar_count() const noexcept;

  Tensor& value(ParamId id) { return values_.at(id); }
  const Tensor& value(ParamId id) const { return values_.at(id); }
  Tensor& grad(ParamId id) { return grads_.at(id); }
  const Tensor& grad(ParamId id) const { return grads_.at(id); }
  const std::string& name(ParamId id) const { return names_.at(id); }

  void zero_grad();

  // Flat views in registry order (used by checkpoints and gradient checks).
  std::vector<double> flatten() const;
  std::vector<double> flatten_grads() const;
  void assign(std::span<const double> flat);

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
};

struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const noexcept { return id != UINT32_MAX; }
};

enum class Activation { kIdentity, kSigmoid, kTanh, kRelu };

class Tape;
using BackwardFn = std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

class Tape {
 public:
  explicit Tape(ParamStore* params = nullptr) : params_(params), source_(params) {}
  // Inference tape: parameters are read from `params` but never collect gradients.
  explicit Tape(const ParamStore& params) : params_(nullptr), source_(&params) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf that collects a gradient (inputs under test, not parameters).
  Var variable(Tensor value);
  Var param(ParamId id);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  // Zero tensor of matching shape when no gradient reached `v`.
  Tensor grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  ParamStore* params() const noexcept { return params_; }

  // Seeds d(loss)/d(loss) = 1 and adds parameter gradients into the store.
  void backward(Var loss);

  // Op construction. `fn` runs only when the output requires a gradient.
  Var push(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn fn);
  Var push(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return push(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
  }
  // Gradient accumulator of an input, allocated on first touch.
  Tensor& grad_ref(Var v);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::optional<ParamId> param;
    BackwardFn backward;
  };

  ParamStore* params_;
  const ParamStore* source_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> param_nodes_;  // ParamId -> node id, UINT32_MAX when unbound
};

// ---- ops ----
Var matmul(Tape& t, Var a, Var b);
// `m` must outlive the tape.
Var spmm(Tape& t, const SparseMatrix& m, Var x);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
// x[n x c] + b[1 x c] broadcast over rows.
Var add_bias(Tape& t, Var x, Var b);
// x[n x c] * s[n x 1] broadcast over columns.
Var mul_col(Tape& t, Var x, Var s);
// x[n x c] * v[1 x c] broadcast over rows.
Var mul_row(Tape& t, Var x, Var v);
Var scale(Tape& t, Var x, double k);
Var add_scalar(Tape& t, Var x, double k);
Var one_minus(Tape& t, Var x);
Var activate(Tape& t, Var x, Activation kind);
Var sigmoid(Tape& t, Var x);
Var tanh(Tape& t, Var x);
Var relu(Tape& t, Var x);
Var abs(Tape& t, Var x);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t end);
// axis 0 normalizes each column, axis 1 each row.
Var softmax(Tape& t, Var x, int axis);
Var sum(Tape& t, Var x);
Var mean(Tape& t, Var x);
// sum_i x_i * w_i with constant weights of the same shape.
Var dot_const(Tape& t, Var x, const Tensor& w);
Var mean_abs_error(Tape& t, Var pred, const Tensor& target);

// ---- plain (tape-free) elementwise helpers ----
double apply_activation(Activation kind, double x);
Tensor activate(const Tensor& x, Activation kind);
Tensor softmax(const Tensor& x, int axis);

// ---- gradient check ----
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

using ScalarObjective = std::function<Var(Tape&)>;

// Compares tape gradients of `objective` with central differences
// (f(p+eps) - f(p-eps)) / (2 eps) over parameter coordinates. Error per
// coordinate is |a - n| / max(|a|, |n|, abs_floor). `max_coords` > 0 checks an
// evenly strided subset.
GradCheckResult grad_check(ParamStore& params, const ScalarObjective& objective, double eps = 1e-5,
                           double abs_floor = 1e-6, std::size_t max_coords = 0);

}  // namespace gst
