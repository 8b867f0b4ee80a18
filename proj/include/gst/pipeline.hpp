#pragma once

// File-level pipeline shared by the CLI and the acceptance run:
// gen-data -> pretrain -> train -> predict -> evaluate, each stage reading the
// previous stage's files from one workspace directory.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gst/checkpoint.hpp"
#include "gst/datasets.hpp"
#include "gst/metrics.hpp"
#include "gst/model.hpp"
#include "gst/reduction.hpp"
#include "gst/training.hpp"

namespace gst {

// Level sizes 86840 -> 28600 -> 9600 as keep ratios.
inline constexpr std::array<double, 2> kLevelKeepRatios{28600.0 / 86840.0, 9600.0 / 28600.0};

struct DeskConfig {
  int span_panels = 19;
  int chord_panels = 19;
  double duration = 2.0;
  double dt = 2e-3;
  std::uint64_t seed = 42;
  SyntheticOracleConfig oracle;
};

std::vector<SelectionConfig> default_selection(std::uint64_t seed);

// <dir>/mesh.json, <dir>/datasets/<name>.{json,bin}, <dir>/hierarchy/.
void gen_data(const std::filesystem::path& dir, const DeskConfig& cfg);

struct Workspace {
  std::filesystem::path dir;
  SurfaceMesh mesh;
  Graph graph;
  ReductionHierarchy hierarchy;
  std::vector<Dataset> datasets;

  std::vector<Dataset> split(Split s) const;
  const Dataset& find(const std::string& name) const;
};

Workspace load_workspace(const std::filesystem::path& dir);
std::shared_ptr<const ModelOperators> workspace_operators(const Workspace& ws, const ModelConfig& c);

struct RunOptions {
  ModelConfig model = scaled_config(16, false, TemporalKind::kStgcn);
  TrainConfig train;
  LossConfig loss;
  AugmentConfig augment;
  double teacher_fraction = 0.5;
};

// Pre-trains the autoencoder on the training C_P snapshots.
std::vector<double> run_pretrain(const Workspace& ws, const RunOptions& opt, const std::filesystem::path& checkpoint,
                                 const ProgressFn& progress = {});

// Trains the full model, starting from `pretrained` when given; writes the
// checkpoint and <checkpoint stem>_loss.csv next to it.
TrainResult run_train(const Workspace& ws, const RunOptions& opt, const std::filesystem::path& checkpoint,
                      const std::optional<std::filesystem::path>& pretrained = std::nullopt,
                      const ProgressFn& progress = {});

GstModel load_model(const Workspace& ws, const std::filesystem::path& checkpoint,
                    const std::optional<ModelConfig>& expected = std::nullopt);

struct Prediction {
  std::string signal;
  std::size_t first_frame = 0;
  std::size_t switch_frame = 0;  // first frame fed with predictions (ARMAX); frames otherwise
  FieldSeries cp;
};

Prediction predict_signal(const GstModel& m, const Dataset& d, double teacher_fraction);
// <dir>/<signal>_pred.{json,bin}
void save_prediction(const Prediction& p, const std::filesystem::path& dir);
Prediction load_prediction(const std::filesystem::path& manifest);

struct HalfSplit {
  double teacher_forced = 0.0;  // mean step MAPE before the switch frame
  double free_running = 0.0;    // mean step MAPE from the switch frame on
};

HalfSplit split_mape(const MetricsReport& r, std::size_t switch_frame);

// Metrics for every prediction in `pred_dir`; writes per-signal reports and summary.json.
std::vector<MetricsReport> run_evaluate(const Workspace& ws, const std::filesystem::path& pred_dir,
                                        const std::filesystem::path& report_dir);

}  // namespace gst
