#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "gst/error.hpp"
#include "gst/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct Args {
  fs::path workspace = "gst_work";
  fs::path checkpoint;
  fs::path pretrained;
  fs::path pred_dir;
  fs::path report_dir;
  std::string mode = "feedforward";
  std::string temporal = "stgcn";
  std::string signal;
  std::size_t epochs = 50;
  std::size_t max_sequences = 0;
  std::uint64_t seed = 42;
  int scale = 16;
  double teacher_fraction = 0.5;
  double lr = 1e-3;
  double lambda = 0.01;
  int span_panels = 19;
  int chord_panels = 19;
  double duration = 2.0;
  double dt = 2e-3;
  bool quiet = false;
};

gst::RunOptions run_options(const Args& a) {
  if (a.mode != "feedforward" && a.mode != "armax") gst::fail_config("--mode must be feedforward or armax");
  if (a.scale < 1) gst::fail_config("--scale must be >= 1");
  gst::RunOptions o;
  o.model = gst::scaled_config(a.scale, a.mode == "armax", gst::temporal_kind_from_string(a.temporal));
  o.train.epochs = a.epochs;
  o.train.seed = a.seed;
  o.train.lr = a.lr;
  o.train.max_sequences = a.max_sequences;
  o.loss.lambda = a.lambda;
  o.teacher_fraction = a.teacher_fraction;
  return o;
}

fs::path or_default(const fs::path& p, const fs::path& fallback) { return p.empty() ? fallback : p; }

fs::path model_checkpoint(const Args& a) {
  return or_default(a.checkpoint, a.workspace / "checkpoints" / (a.mode + "_" + a.temporal + ".json"));
}

void add_model_flags(CLI::App* c, Args& a) {
  c->add_option("--mode", a.mode, "feedforward or armax")->check(CLI::IsMember({"feedforward", "armax"}));
  c->add_option("--temporal", a.temporal, "gru, lstm, attn or stgcn")
      ->check(CLI::IsMember({"gru", "lstm", "attn", "stgcn"}));
  c->add_option("--scale", a.scale, "width divisor");
}

void add_train_flags(CLI::App* c, Args& a) {
  c->add_option("--epochs", a.epochs, "training epochs");
  c->add_option("--seed", a.seed, "random seed");
  c->add_option("--lr", a.lr, "Adam learning rate");
  c->add_option("--max-sequences", a.max_sequences, "per-epoch cap on mini-sequences (0 = all)");
}

int exit_code(gst::ErrorKind k) {
  switch (k) {
    case gst::ErrorKind::kConfig: return 2;
    case gst::ErrorKind::kIo: return 3;
    case gst::ErrorKind::kNumerical: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal graph autoencoder for unsteady surface pressure"};
  app.require_subcommand(1);
  Args a;
  app.add_option("-w,--workspace", a.workspace, "workspace directory");
  app.add_flag("-q,--quiet", a.quiet, "suppress progress output");

  auto* gen = app.add_subcommand("gen-data", "generate mesh, synthetic signals and reduction hierarchy");
  gen->add_option("--seed", a.seed, "hierarchy sampling seed");
  gen->add_option("--span-panels", a.span_panels, "spanwise panels");
  gen->add_option("--chord-panels", a.chord_panels, "chordwise panels");
  gen->add_option("--duration", a.duration, "signal duration in s");
  gen->add_option("--dt", a.dt, "time step in s");

  auto* pre = app.add_subcommand("pretrain", "pre-train the pressure autoencoder");
  add_model_flags(pre, a);
  add_train_flags(pre, a);
  pre->add_option("-o,--checkpoint", a.checkpoint, "autoencoder checkpoint path");

  auto* train = app.add_subcommand("train", "train the full model with BPTT");
  add_model_flags(train, a);
  add_train_flags(train, a);
  train->add_option("--lambda", a.lambda, "moment penalty weight");
  train->add_option("--pretrained", a.pretrained, "autoencoder checkpoint to start from");
  train->add_option("-o,--checkpoint", a.checkpoint, "model checkpoint path");

  auto* predict = app.add_subcommand("predict", "roll the model over signals");
  add_model_flags(predict, a);
  predict->add_option("-c,--checkpoint", a.checkpoint, "model checkpoint path");
  predict->add_option("--signal", a.signal, "single signal name (default: validation signals)");
  predict->add_option("--teacher-fraction", a.teacher_fraction, "ARMAX fraction of frames fed with ground truth")
      ->check(CLI::Range(0.0, 1.0));
  predict->add_option("-o,--out", a.pred_dir, "prediction directory");

  auto* evaluate = app.add_subcommand("evaluate", "MAPE, R2, RMSE and force coefficients of predictions");
  evaluate->add_option("-p,--predictions", a.pred_dir, "prediction directory");
  evaluate->add_option("-o,--out", a.report_dir, "report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    auto progress = [&](std::size_t epoch, double loss) {
      if (!a.quiet) std::fprintf(stderr, "epoch %zu loss %.6g\n", epoch, loss);
    };
    if (*gen) {
      gst::DeskConfig cfg;
      cfg.span_panels = a.span_panels;
      cfg.chord_panels = a.chord_panels;
      cfg.duration = a.duration;
      cfg.dt = a.dt;
      cfg.seed = a.seed;
      gst::gen_data(a.workspace, cfg);
      if (!a.quiet) std::printf("wrote %s\n", a.workspace.string().c_str());
    } else if (*pre) {
      const gst::Workspace ws = gst::load_workspace(a.workspace);
      const fs::path out = or_default(a.checkpoint, a.workspace / "checkpoints" / "autoencoder.json");
      gst::RunOptions o = run_options(a);
      const auto history = gst::run_pretrain(ws, o, out, progress);
      if (!a.quiet) std::printf("reconstruction MAE %.6g -> %.6g\n", history.front(), history.back());
    } else if (*train) {
      const gst::Workspace ws = gst::load_workspace(a.workspace);
      std::optional<fs::path> pretrained;
      if (!a.pretrained.empty()) pretrained = a.pretrained;
      gst::RunOptions o = run_options(a);
      const fs::path out = model_checkpoint(a);
      const auto r = gst::run_train(ws, o, out, pretrained, progress);
      if (!a.quiet)
        std::printf("loss %.6g -> %.6g over %zu epochs\n", r.epoch_loss.front(), r.epoch_loss.back(),
                    r.epoch_loss.size());
    } else if (*predict) {
      const gst::Workspace ws = gst::load_workspace(a.workspace);
      std::optional<gst::ModelConfig> expected;
      if (predict->count("--mode") || predict->count("--temporal") || predict->count("--scale"))
        expected = run_options(a).model;
      const gst::GstModel m = gst::load_model(ws, model_checkpoint(a), expected);
      const fs::path out = or_default(a.pred_dir, a.workspace / "predictions");
      std::vector<gst::Dataset> targets;
      if (a.signal.empty())
        targets = ws.split(gst::Split::kValidation);
      else
        targets.push_back(ws.find(a.signal));
      for (const gst::Dataset& d : targets) {
        gst::save_prediction(gst::predict_signal(m, d, a.teacher_fraction), out);
        if (!a.quiet) std::printf("predicted %s\n", d.name.c_str());
      }
    } else if (*evaluate) {
      const gst::Workspace ws = gst::load_workspace(a.workspace);
      const auto reports = gst::run_evaluate(ws, or_default(a.pred_dir, a.workspace / "predictions"),
                                             or_default(a.report_dir, a.workspace / "reports"));
      for (const auto& r : reports)
        std::printf("%s MAPE %.4f%% R2 %.6f RMSE %.6g\n", r.signal.c_str(), r.mape, r.r2, r.rmse);
    }
  } catch (const gst::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
