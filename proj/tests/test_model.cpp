#include <doctest.h>

#include <cmath>

#include "gst/model.hpp"
#include "support.hpp"
#include "tiny.hpp"

using namespace gst;
using namespace gst::test;

namespace {

constexpr TemporalKind kKinds[] = {TemporalKind::kGru, TemporalKind::kLstm, TemporalKind::kAttn, TemporalKind::kStgcn};

// Two chained predictions; ARMAX feeds the first back through the pressure encoder.
Var two_step_objective(Tape& t, const GstModel& m, const Dataset& d, const Tensor& w1, const Tensor& w2) {
  std::vector<EncodedFrame> motion, pressure;
  for (std::size_t f = 0; f < 4; ++f) motion.push_back(m.encode_motion(t, d.motion[f]));
  if (m.config().armax)
    for (std::size_t f = 0; f < 3; ++f) pressure.push_back(m.encode_pressure(t, t.constant(to_column(d.cp[f]))));
  const std::span<const EncodedFrame> p0 =
      m.config().armax ? std::span<const EncodedFrame>(pressure.data(), 3) : std::span<const EncodedFrame>{};
  const Var a = m.predict(t, std::span<const EncodedFrame>(motion.data(), 3), p0);
  if (m.config().armax) pressure.push_back(m.encode_pressure(t, a));
  const std::span<const EncodedFrame> p1 =
      m.config().armax ? std::span<const EncodedFrame>(pressure.data() + 1, 3) : std::span<const EncodedFrame>{};
  const Var b = m.predict(t, std::span<const EncodedFrame>(motion.data() + 1, 3), p1);
  return add(t, dot_const(t, a, w1), dot_const(t, b, w2));
}

}  // namespace

TEST_CASE("parameter counts at full width") {
  CHECK(count_parameters(scaled_config(1, true, TemporalKind::kStgcn)) == 5775023);
  CHECK(count_parameters(scaled_config(1, false, TemporalKind::kStgcn)) == 1962111);
}

TEST_CASE("desk widths and configuration round trip") {
  const ModelConfig c = scaled_config(16, false, TemporalKind::kStgcn);
  CHECK(c.level0_widths == std::vector<std::size_t>{16, 14, 6});
  CHECK(c.level1_width == 4);
  CHECK(c.latent == 23);
  for (bool armax : {false, true})
    for (TemporalKind k : kKinds) {
      const ModelConfig a = scaled_config(16, armax, k);
      const ModelConfig b = model_config_from_json(to_json(a));
      CHECK(config_hash(a) == config_hash(b));
      CHECK(temporal_kind_from_string(to_string(k)) == k);
    }
  CHECK(config_hash(scaled_config(16, false, TemporalKind::kGru)) !=
        config_hash(scaled_config(16, true, TemporalKind::kGru)));
  CHECK_THROWS(scaled_config(0, false, TemporalKind::kGru));
  CHECK_THROWS(temporal_kind_from_string("rnn"));
}

TEST_CASE("gradients of every temporal layer and variant match finite differences") {
  const TinyWorld w = tiny_world();
  REQUIRE(w.ops->nodes[0] == 12);
  const Dataset d = tiny_dataset(w.mesh, 6, 0);
  Rng rng(17);
  const Tensor w1 = random_tensor(rng, 12, 1), w2 = random_tensor(rng, 12, 1);
  for (bool armax : {false, true})
    for (TemporalKind k : kKinds) {
      GstModel m(tiny_config(armax, k), w.ops, 3);
      m.scaling() = fit_scaling(w.mesh, std::span<const Dataset>(&d, 1));
      CHECK(m.params().scalar_count() == count_parameters(m.config()));
      const GradCheckResult r =
          grad_check(m.params(), [&](Tape& t) { return two_step_objective(t, m, d, w1, w2); }, 1e-5, 1e-6, 600);
      INFO(to_string(k), " armax=", armax, " worst ", r.worst_analytic, " vs ", r.worst_numeric);
      CHECK(r.checked > 0);
      CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("rollouts produce one frame per target and ARMAX switches to feedback") {
  const TinyWorld w = tiny_world();
  const Dataset d = tiny_dataset(w.mesh, 12, 1);
  GstModel ff(tiny_config(false, TemporalKind::kStgcn), w.ops, 5);
  const FieldSeries p = rollout_feedforward(ff, d);
  CHECK(p.size() == d.frames() - 3);
  for (const auto& f : p) CHECK(f.size() == 12);
  const Tensor direct = ff.predict_values(std::span<const MotionSample>(d.motion.data() + 4, 3), {});
  CHECK(to_vector(direct) == p[4]);

  GstModel ax(tiny_config(true, TemporalKind::kGru), w.ops, 5);
  CHECK_THROWS(rollout_armax(ff, d, 0.5));
  const FieldSeries teacher = rollout_armax(ax, d, 1.0);
  const FieldSeries half = rollout_armax(ax, d, 0.5);
  REQUIRE(teacher.size() == d.frames() - 3);
  REQUIRE(half.size() == teacher.size());
  const std::size_t sw = teacher_switch_frame(d.frames(), 0.5);
  CHECK(sw == 6);
  for (std::size_t f = 3; f < d.frames(); ++f) {
    const Tensor v = ax.predict_values(std::span<const MotionSample>(d.motion.data() + f - 3, 3),
                                       std::span<const std::vector<double>>(d.cp.data() + f - 3, 3));
    CHECK(to_vector(v) == teacher[f - 3]);
    if (f <= sw) CHECK(half[f - 3] == teacher[f - 3]);
  }
  CHECK(half.back() != teacher.back());
  CHECK(teacher_switch_frame(100, 0.0) == 3);
  CHECK(teacher_switch_frame(100, 1.0) == 100);
  CHECK_THROWS(teacher_switch_frame(100, 1.5));
}

TEST_CASE("same seed gives the same parameters") {
  const TinyWorld w = tiny_world();
  GstModel a(tiny_config(true, TemporalKind::kLstm), w.ops, 9), b(tiny_config(true, TemporalKind::kLstm), w.ops, 9);
  GstModel c(tiny_config(true, TemporalKind::kLstm), w.ops, 10);
  CHECK(a.params().flatten() == b.params().flatten());
  CHECK(a.params().flatten() != c.params().flatten());
}
