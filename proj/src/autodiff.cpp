#include "gst/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gst/error.hpp"
#include "gst/kernels.hpp"

namespace gst {

// ---------------------------------------------------------------- ParamStore

ParamId ParamStore::add(std::string name, Tensor init) {
  if (!init.all_finite()) fail_numerical("non-finite initial value for parameter " + name);
  names_.push_back(std::move(name));
  grads_.emplace_back(init.shape(), 0.0);
  values_.push_back(std::move(init));
  return values_.size() - 1;
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const Tensor& v : values_) n += v.size();
  return n;
}

void ParamStore::zero_grad() {
  for (Tensor& g : grads_) g.fill(0.0);
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const Tensor& v : values_) out.insert(out.end(), v.values().begin(), v.values().end());
  return out;
}

std::vector<double> ParamStore::flatten_grads() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const Tensor& g : grads_) out.insert(out.end(), g.values().begin(), g.values().end());
  return out;
}

void ParamStore::assign(std::span<const double> flat) {
  if (flat.size() != scalar_count())
    fail_config("parameter blob has " + std::to_string(flat.size()) + " values, model needs " +
                std::to_string(scalar_count()));
  std::size_t off = 0;
  for (Tensor& v : values_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), v.size(), v.data());
    off += v.size();
  }
}

// ---------------------------------------------------------------------- Tape

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::variable(Tensor value) {
  Var v = constant(std::move(value));
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::param(ParamId id) {
  if (source_ == nullptr) fail_config("tape has no parameter store");
  if (param_nodes_.size() < source_->size()) param_nodes_.resize(source_->size(), UINT32_MAX);
  if (param_nodes_.at(id) != UINT32_MAX) return Var{param_nodes_[id]};
  Node n;
  n.value = source_->value(id);
  n.requires_grad = params_ != nullptr;
  n.param = id;
  nodes_.push_back(std::move(n));
  param_nodes_[id] = static_cast<std::uint32_t>(nodes_.size() - 1);
  return Var{param_nodes_[id]};
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.empty() && !n.value.empty()) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Tensor& Tape::grad_ref(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Var Tape::push(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  if (!value.all_finite()) fail_numerical(std::string("non-finite output from op ") + op);
  Node n;
  n.value = std::move(value);
  for (Var in : inputs) n.requires_grad = n.requires_grad || nodes_.at(in.id).requires_grad;
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::backward(Var loss) {
  Node& root = nodes_.at(loss.id);
  if (root.value.size() != 1) fail_config("backward() needs a scalar loss, got " + root.value.shape_string());
  if (!root.requires_grad) return;
  grad_ref(loss)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.value, n.grad);
  }
  if (params_ != nullptr) {
    for (std::size_t id = 0; id < param_nodes_.size(); ++id) {
      const std::uint32_t node = param_nodes_[id];
      if (node == UINT32_MAX || node > loss.id || nodes_[node].grad.empty()) continue;
      Tensor& g = params_->grad(id);
      kernels::active().axpy(g.size(), 1.0, nodes_[node].grad.data(), g.data());
    }
  }
}

// ----------------------------------------------------------------------- ops

namespace {

const kernels::KernelTable& kt() { return kernels::active(); }

void require(bool ok, const char* op, const Tensor& a, const Tensor& b) {
  if (!ok) fail_config(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

void accumulate(Tape& t, Var v, const Tensor& g) {
  if (!t.requires_grad(v)) return;
  Tensor& dst = t.grad_ref(v);
  kt().axpy(dst.size(), 1.0, g.data(), dst.data());
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require(av.rank() == 2 && bv.rank() == 2 && av.cols() == bv.rows(), "matmul", av, bv);
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  Tensor out = Tensor::zeros(n, m);
  kernels::gemm_acc(kt(), n, k, m, av.data(), bv.data(), out.data());
  return t.push("matmul", std::move(out), {a, b}, [a, b, n, k, m](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(a)) kernels::gemm_nt_acc(kt(), n, m, k, g.data(), t.value(b).data(), t.grad_ref(a).data());
    if (t.requires_grad(b)) kernels::gemm_tn_acc(kt(), n, k, m, t.value(a).data(), g.data(), t.grad_ref(b).data());
  });
}

Var spmm(Tape& t, const SparseMatrix& m, Var x) {
  const Tensor& xv = t.value(x);
  if (xv.rows() != m.cols())
    fail_config("spmm: matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " vs operand " +
                xv.shape_string());
  Tensor out = spmv(m, xv);
  const SparseMatrix* mp = &m;
  return t.push("spmm", std::move(out), {x}, [mp, x](Tape& t, const Tensor&, const Tensor& g) {
    kernels::coo_spmm_t_acc(kt(), mp->row_indices(), mp->col_indices(), mp->values(), g.cols(), g.data(),
                            t.grad_ref(x).data());
  });
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require(av.same_shape(bv), "add", av, bv);
  Tensor out(av.shape());
  kt().add(out.size(), av.data(), bv.data(), out.data());
  return t.push("add", std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    accumulate(t, a, g);
    accumulate(t, b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require(av.same_shape(bv), "sub", av, bv);
  Tensor out(av.shape());
  kt().sub(out.size(), av.data(), bv.data(), out.data());
  return t.push("sub", std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    accumulate(t, a, g);
    if (t.requires_grad(b)) {
      Tensor& db = t.grad_ref(b);
      kt().axpy(db.size(), -1.0, g.data(), db.data());
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require(av.same_shape(bv), "mul", av, bv);
  Tensor out(av.shape());
  kt().mul(out.size(), av.data(), bv.data(), out.data());
  return t.push("mul", std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(a)) kt().mul_acc(g.size(), g.data(), t.value(b).data(), t.grad_ref(a).data());
    if (t.requires_grad(b)) kt().mul_acc(g.size(), g.data(), t.value(a).data(), t.grad_ref(b).data());
  });
}

Var add_bias(Tape& t, Var x, Var b) {
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(b);
  const std::size_t n = xv.rows(), c = xv.cols();
  require(bv.size() == c, "add_bias", xv, bv);
  Tensor out = xv;
  for (std::size_t i = 0; i < n; ++i) kt().axpy(c, 1.0, bv.data(), out.data() + i * c);
  return t.push("add_bias", std::move(out), {x, b}, [x, b, n, c](Tape& t, const Tensor&, const Tensor& g) {
    accumulate(t, x, g);
    if (t.requires_grad(b)) {
      Tensor& db = t.grad_ref(b);
      for (std::size_t i = 0; i < n; ++i) kt().axpy(c, 1.0, g.data() + i * c, db.data());
    }
  });
}

Var mul_col(Tape& t, Var x, Var s) {
  const Tensor& xv = t.value(x);
  const Tensor& sv = t.value(s);
  const std::size_t n = xv.rows(), c = xv.cols();
  require(sv.size() == n, "mul_col", xv, sv);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < n; ++i) kt().scale(c, sv[i], xv.data() + i * c, out.data() + i * c);
  return t.push("mul_col", std::move(out), {x, s}, [x, s, n, c](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(x)) {
      Tensor& dx = t.grad_ref(x);
      const Tensor& sv = t.value(s);
      for (std::size_t i = 0; i < n; ++i) kt().axpy(c, sv[i], g.data() + i * c, dx.data() + i * c);
    }
    if (t.requires_grad(s)) {
      Tensor& ds = t.grad_ref(s);
      const Tensor& xv = t.value(x);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += g[i * c + j] * xv[i * c + j];
        ds[i] += acc;
      }
    }
  });
}

Var mul_row(Tape& t, Var x, Var v) {
  const Tensor& xv = t.value(x);
  const Tensor& vv = t.value(v);
  const std::size_t n = xv.rows(), c = xv.cols();
  require(vv.size() == c, "mul_row", xv, vv);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < n; ++i) kt().mul(c, xv.data() + i * c, vv.data(), out.data() + i * c);
  return t.push("mul_row", std::move(out), {x, v}, [x, v, n, c](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(x)) {
      Tensor& dx = t.grad_ref(x);
      const Tensor& vv = t.value(v);
      for (std::size_t i = 0; i < n; ++i) kt().mul_acc(c, g.data() + i * c, vv.data(), dx.data() + i * c);
    }
    if (t.requires_grad(v)) {
      Tensor& dv = t.grad_ref(v);
      const Tensor& xv = t.value(x);
      for (std::size_t i = 0; i < n; ++i) kt().mul_acc(c, g.data() + i * c, xv.data() + i * c, dv.data());
    }
  });
}

Var scale(Tape& t, Var x, double k) {
  const Tensor& xv = t.value(x);
  Tensor out(xv.shape());
  kt().scale(out.size(), k, xv.data(), out.data());
  return t.push("scale", std::move(out), {x}, [x, k](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& dx = t.grad_ref(x);
    kt().axpy(dx.size(), k, g.data(), dx.data());
  });
}

Var add_scalar(Tape& t, Var x, double k) {
  Tensor out = t.value(x);
  for (double& v : out.storage()) v += k;
  return t.push("add_scalar", std::move(out), {x},
                [x](Tape& t, const Tensor&, const Tensor& g) { accumulate(t, x, g); });
}

Var one_minus(Tape& t, Var x) { return add_scalar(t, scale(t, x, -1.0), 1.0); }

double apply_activation(Activation kind, double x) {
  switch (kind) {
    case Activation::kIdentity: return x;
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::kTanh: return std::tanh(x);
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

Tensor activate(const Tensor& x, Activation kind) {
  Tensor out = x;
  if (kind == Activation::kIdentity) return out;
  for (double& v : out.storage()) v = apply_activation(kind, v);
  return out;
}

Var activate(Tape& t, Var x, Activation kind) {
  if (kind == Activation::kIdentity) return x;
  Tensor out = activate(t.value(x), kind);
  return t.push("activate", std::move(out), {x}, [x, kind](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor& dx = t.grad_ref(x);
    const std::size_t n = g.size();
    switch (kind) {
      case Activation::kSigmoid:
        for (std::size_t i = 0; i < n; ++i) dx[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      case Activation::kTanh:
        for (std::size_t i = 0; i < n; ++i) dx[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      case Activation::kRelu:
        for (std::size_t i = 0; i < n; ++i) dx[i] += y[i] > 0.0 ? g[i] : 0.0;
        break;
      case Activation::kIdentity: break;
    }
  });
}

Var sigmoid(Tape& t, Var x) { return activate(t, x, Activation::kSigmoid); }
Var tanh(Tape& t, Var x) { return activate(t, x, Activation::kTanh); }
Var relu(Tape& t, Var x) { return activate(t, x, Activation::kRelu); }

Var abs(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (double& v : out.storage()) v = std::abs(v);
  return t.push("abs", std::move(out), {x}, [x](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& dx = t.grad_ref(x);
    const Tensor& xv = t.value(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += xv[i] > 0.0 ? g[i] : (xv[i] < 0.0 ? -g[i] : 0.0);
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) fail_config("concat_cols of nothing");
  const std::size_t n = t.value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    require(v.rows() == n, "concat_cols", t.value(parts[0]), v);
    widths.push_back(v.cols());
    total += v.cols();
  }
  Tensor out = Tensor::zeros(n, total);
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& v = t.value(parts[p]);
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(v.data() + i * widths[p], widths[p], out.data() + i * total + off);
    off += widths[p];
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.push("concat_cols", std::move(out), std::span<const Var>(ins),
                [ins, widths, n, total](Tape& t, const Tensor&, const Tensor& g) {
                  std::size_t off = 0;
                  for (std::size_t p = 0; p < ins.size(); ++p) {
                    if (t.requires_grad(ins[p])) {
                      Tensor& d = t.grad_ref(ins[p]);
                      for (std::size_t i = 0; i < n; ++i)
                        kt().axpy(widths[p], 1.0, g.data() + i * total + off, d.data() + i * widths[p]);
                    }
                    off += widths[p];
                  }
                });
}

Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = t.value(x);
  const std::size_t n = xv.rows(), c = xv.cols();
  if (begin > end || end > c) fail_config("slice_cols range out of bounds for " + xv.shape_string());
  const std::size_t w = end - begin;
  Tensor out = Tensor::zeros(n, w);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(xv.data() + i * c + begin, w, out.data() + i * w);
  return t.push("slice_cols", std::move(out), {x}, [x, n, c, begin, w](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& dx = t.grad_ref(x);
    for (std::size_t i = 0; i < n; ++i) kt().axpy(w, 1.0, g.data() + i * w, dx.data() + i * c + begin);
  });
}

Tensor softmax(const Tensor& x, int axis) {
  if (x.rank() != 2 || (axis != 0 && axis != 1)) fail_config("softmax needs a rank-2 tensor and axis 0 or 1");
  const std::size_t n = x.rows(), c = x.cols();
  Tensor out(x.shape());
  const std::size_t groups = axis == 1 ? n : c;
  const std::size_t len = axis == 1 ? c : n;
  auto at = [&](std::size_t g, std::size_t k) { return axis == 1 ? g * c + k : k * c + g; };
  for (std::size_t g = 0; g < groups; ++g) {
    double mx = -INFINITY;
    for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, x[at(g, k)]);
    double z = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      out[at(g, k)] = std::exp(x[at(g, k)] - mx);
      z += out[at(g, k)];
    }
    for (std::size_t k = 0; k < len; ++k) out[at(g, k)] /= z;
  }
  return out;
}

Var softmax(Tape& t, Var x, int axis) {
  Tensor out = softmax(t.value(x), axis);
  return t.push("softmax", std::move(out), {x}, [x, axis](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor& dx = t.grad_ref(x);
    const std::size_t n = y.rows(), c = y.cols();
    const std::size_t groups = axis == 1 ? n : c;
    const std::size_t len = axis == 1 ? c : n;
    auto at = [&](std::size_t gi, std::size_t k) { return axis == 1 ? gi * c + k : k * c + gi; };
    for (std::size_t gi = 0; gi < groups; ++gi) {
      double dotp = 0.0;
      for (std::size_t k = 0; k < len; ++k) dotp += g[at(gi, k)] * y[at(gi, k)];
      for (std::size_t k = 0; k < len; ++k) dx[at(gi, k)] += y[at(gi, k)] * (g[at(gi, k)] - dotp);
    }
  });
}

Var sum(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  double s = 0.0;
  for (double v : xv.values()) s += v;
  return t.push("sum", Tensor::scalar(s), {x}, [x](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& dx = t.grad_ref(x);
    for (double& v : dx.storage()) v += g[0];
  });
}

Var mean(Tape& t, Var x) {
  const double n = static_cast<double>(t.value(x).size());
  return scale(t, sum(t, x), 1.0 / n);
}

Var dot_const(Tape& t, Var x, const Tensor& w) {
  const Tensor& xv = t.value(x);
  require(xv.size() == w.size(), "dot_const", xv, w);
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += xv[i] * w[i];
  return t.push("dot_const", Tensor::scalar(s), {x}, [x, w](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& dx = t.grad_ref(x);
    kt().axpy(dx.size(), g[0], w.data(), dx.data());
  });
}

Var mean_abs_error(Tape& t, Var pred, const Tensor& target) {
  const Tensor& pv = t.value(pred);
  require(pv.size() == target.size(), "mean_abs_error", pv, target);
  const Var diff = sub(t, pred, t.constant(Tensor(pv.shape(), std::vector<double>(target.values().begin(),
                                                                                  target.values().end()))));
  return mean(t, abs(t, diff));
}

// ------------------------------------------------------------- gradient check

GradCheckResult grad_check(ParamStore& params, const ScalarObjective& objective, double eps, double abs_floor,
                           std::size_t max_coords) {
  if (!(eps >= 1e-7 && eps <= 1e-4)) fail_config("grad_check eps must lie in [1e-7, 1e-4]");
  params.zero_grad();
  {
    Tape tape(&params);
    const Var loss = objective(tape);
    if (!std::isfinite(tape.value(loss).item())) fail_numerical("grad_check objective is not finite");
    tape.backward(loss);
  }
  const std::vector<double> analytic = params.flatten_grads();
  std::vector<double> point = params.flatten();
  const std::size_t total = point.size();
  const std::size_t stride = (max_coords == 0 || max_coords >= total) ? 1 : (total + max_coords - 1) / max_coords;

  auto eval = [&](const std::vector<double>& p) {
    params.assign(p);
    Tape tape(&params);
    const double v = tape.value(objective(tape)).item();
    if (!std::isfinite(v)) fail_numerical("grad_check objective is not finite");
    return v;
  };

  GradCheckResult r;
  for (std::size_t i = 0; i < total; i += stride) {
    const double orig = point[i];
    point[i] = orig + eps;
    const double fp = eval(point);
    point[i] = orig - eps;
    const double fm = eval(point);
    point[i] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), abs_floor});
    const double err = std::abs(analytic[i] - numeric) / denom;
    ++r.checked;
    if (r.checked == 1 || err > r.max_rel_error) {
      r.max_rel_error = err;
      r.worst_index = i;
      r.worst_analytic = analytic[i];
      r.worst_numeric = numeric;
    }
  }
  params.assign(point);
  params.zero_grad();
  return r;
}

}  // namespace gst
