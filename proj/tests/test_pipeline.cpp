#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <sys/wait.h>

#include "gst/pipeline.hpp"
#include "support.hpp"

using namespace gst;
namespace fs = std::filesystem;

namespace {

DeskConfig tiny_desk() {
  DeskConfig c;
  c.span_panels = 6;
  c.chord_panels = 6;
  c.duration = 0.1;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GST_CLI_PATH) + " -q " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("tiny workspace runs through every stage") {
  const fs::path dir = fs::temp_directory_path() / "gst_test_pipeline";
  fs::remove_all(dir);
  gen_data(dir, tiny_desk());
  const Workspace ws = load_workspace(dir);
  CHECK(ws.mesh.size() == 98);
  CHECK(ws.datasets.size() == 12);
  CHECK(ws.split(Split::kTrain).size() == 4);
  CHECK(ws.split(Split::kValidation).size() == 2);
  CHECK(ws.find("training_1").frames() == 50);
  CHECK_THROWS(ws.find("nope"));
  CHECK(ws.hierarchy.level_size(1) == target_count(98, kLevelKeepRatios[0]));
  CHECK(ws.hierarchy.level_size(2) == target_count(ws.hierarchy.level_size(1), kLevelKeepRatios[1]));

  RunOptions opt;
  opt.model = scaled_config(32, true, TemporalKind::kGru);
  opt.train.epochs = 1;
  opt.train.max_sequences = 4;
  const auto hist = run_pretrain(ws, opt, dir / "ae.json");
  CHECK(hist.size() == 2);
  const TrainResult r = run_train(ws, opt, dir / "model.json", dir / "ae.json");
  CHECK(r.epoch_loss.size() == 1);
  CHECK(fs::exists(dir / "model_loss.csv"));

  const GstModel m = load_model(ws, dir / "model.json", opt.model);
  CHECK_THROWS(load_model(ws, dir / "model.json", scaled_config(32, false, TemporalKind::kGru)));
  const Dataset& v = ws.find("validation_1");
  const Prediction p = predict_signal(m, v, 0.5);
  CHECK(p.first_frame == 3);
  CHECK(p.switch_frame == 25);
  CHECK(p.cp.size() == v.frames() - 3);
  save_prediction(p, dir / "pred");
  const Prediction q = load_prediction(dir / "pred" / "validation_1_pred.json");
  CHECK(q.cp == p.cp);
  CHECK(q.switch_frame == p.switch_frame);

  const auto reports = run_evaluate(ws, dir / "pred", dir / "reports");
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].step_mape.size() == p.cp.size());
  std::ifstream in(dir / "reports" / "summary.json");
  const nlohmann::json s = nlohmann::json::parse(in);
  CHECK(s.contains("validation_1"));
  fs::remove_all(dir);
}

TEST_CASE("half split averages step errors on each side of the switch") {
  MetricsReport r;
  r.first_step = 3;
  r.step_mape = {1.0, 2.0, 3.0, 4.0};
  const HalfSplit h = split_mape(r, 5);
  CHECK(h.teacher_forced == 1.5);
  CHECK(h.free_running == 3.5);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = fs::temp_directory_path() / "gst_test_cli";
  fs::remove_all(dir);
  const std::string w = "-w " + dir.string();
  CHECK(run_cli(w + " gen-data --span-panels 6 --chord-panels 6 --duration 0.1") == 0);
  CHECK(run_cli(w + " train --epochs 1 --max-sequences 2 --scale 32") == 0);
  CHECK(fs::exists(dir / "checkpoints" / "feedforward_stgcn.json"));
  CHECK(run_cli(w + " predict --scale 32") == 0);
  CHECK(run_cli(w + " evaluate") == 0);
  CHECK(fs::exists(dir / "reports" / "summary.json"));
  CHECK(run_cli(w + " predict --scale 16") == 2);
  CHECK(run_cli(w + " train --mode sideways") == 2);
  CHECK(run_cli(w + " gen-data --span-panels 2") == 2);
  CHECK(run_cli("-w " + (dir / "missing").string() + " evaluate") == 3);
  CHECK(run_cli(w + " predict -c " + (dir / "none.json").string()) == 3);
  fs::remove_all(dir);
}
