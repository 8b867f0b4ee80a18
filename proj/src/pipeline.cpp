#include "gst/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "gst/binary_io.hpp"
#include "gst/error.hpp"

namespace gst {
namespace fs = std::filesystem;

namespace {

void write_json(const nlohmann::json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail_io("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail_io("malformed " + path.string() + ": " + e.what());
  }
}

std::vector<std::vector<double>> training_snapshots(const Workspace& ws) {
  std::vector<std::vector<double>> out;
  for (const Dataset& d : ws.split(Split::kTrain)) out.insert(out.end(), d.cp.begin(), d.cp.end());
  if (out.empty()) fail_config("workspace has no training signals");
  return out;
}

}  // namespace

std::vector<SelectionConfig> default_selection(std::uint64_t seed) {
  std::vector<SelectionConfig> levels(2);
  for (std::size_t l = 0; l < 2; ++l) {
    levels[l].keep_ratio = kLevelKeepRatios[l];
    levels[l].seed = seed + l;
  }
  return levels;
}

void gen_data(const fs::path& dir, const DeskConfig& cfg) {
  const SurfaceMesh mesh = generate_wing_mesh(cfg.span_panels, cfg.chord_panels);
  fs::create_directories(dir / "datasets");
  save_mesh_json(mesh, dir / "mesh.json");
  std::vector<Dataset> all = build_splits(table1_specs(cfg.duration, cfg.dt), cfg.oracle, mesh);
  std::vector<std::vector<double>> train_frames;
  for (Dataset& d : all) {
    d.mesh_file = "../mesh.json";
    save_dataset(d, dir / "datasets");
    if (d.split == Split::kTrain) train_frames.insert(train_frames.end(), d.cp.begin(), d.cp.end());
  }
  const Graph graph = graph_from_mesh(mesh);
  const std::vector<double> grad = time_averaged_gradient_magnitude(mesh, graph, train_frames);
  const std::vector<SelectionConfig> levels = default_selection(cfg.seed);
  save_hierarchy(build_hierarchy(mesh.points(), grad, levels), dir / "hierarchy");
  write_json({{"format", "gst-workspace"},
              {"version", 1},
              {"seed", cfg.seed},
              {"span_panels", cfg.span_panels},
              {"chord_panels", cfg.chord_panels},
              {"duration", cfg.duration},
              {"dt", cfg.dt},
              {"nodes", mesh.size()},
              {"datasets", [&] {
                 nlohmann::json names = nlohmann::json::array();
                 for (const Dataset& d : all) names.push_back(d.name);
                 return names;
               }()}},
             dir / "workspace.json");
}

std::vector<Dataset> Workspace::split(Split s) const {
  std::vector<Dataset> out;
  for (const Dataset& d : datasets)
    if (d.split == s) out.push_back(d);
  return out;
}

const Dataset& Workspace::find(const std::string& name) const {
  for (const Dataset& d : datasets)
    if (d.name == name) return d;
  fail_config("no dataset named " + name);
}

Workspace load_workspace(const fs::path& dir) {
  const nlohmann::json manifest = read_json(dir / "workspace.json");
  Workspace ws;
  ws.dir = dir;
  ws.mesh = load_mesh_json(dir / "mesh.json");
  ws.graph = graph_from_mesh(ws.mesh);
  ws.hierarchy = load_hierarchy(dir / "hierarchy");
  if (ws.hierarchy.base_nodes != ws.mesh.size()) fail_config("hierarchy was built for a different mesh");
  for (const auto& name : manifest.at("datasets")) {
    ws.datasets.push_back(load_dataset(dir / "datasets" / (name.get<std::string>() + ".json")));
    if (ws.datasets.back().nodes() != ws.mesh.size())
      fail_config("dataset " + ws.datasets.back().name + " does not match the mesh");
  }
  return ws;
}

std::shared_ptr<const ModelOperators> workspace_operators(const Workspace& ws, const ModelConfig& c) {
  return make_operators(ws.mesh, ws.graph, ws.hierarchy, c.cheb_order);
}

std::vector<double> run_pretrain(const Workspace& ws, const RunOptions& opt, const fs::path& checkpoint,
                                 const ProgressFn& progress) {
  Autoencoder ae(opt.model, workspace_operators(ws, opt.model), opt.train.seed);
  const std::vector<Dataset> train = ws.split(Split::kTrain);
  ae.scaling() = fit_scaling(ws.mesh, train);
  const std::vector<double> history =
      pretrain_autoencoder(ae, training_snapshots(ws), opt.augment, opt.train, progress);
  Checkpoint c = make_checkpoint("autoencoder", opt.model, opt.train.seed, ae.scaling(), ae.params());
  c.extra = {{"epochs", opt.train.epochs}, {"reconstruction_mae", history}};
  save_checkpoint(c, checkpoint);
  return history;
}

TrainResult run_train(const Workspace& ws, const RunOptions& opt, const fs::path& checkpoint,
                      const std::optional<fs::path>& pretrained, const ProgressFn& progress) {
  GstModel model(opt.model, workspace_operators(ws, opt.model), opt.train.seed);
  const std::vector<Dataset> train = ws.split(Split::kTrain);
  model.scaling() = fit_scaling(ws.mesh, train);
  std::size_t transferred = 0;
  if (pretrained) {
    const Checkpoint ae = load_checkpoint(*pretrained);
    if (ae.kind != "autoencoder") fail_config(pretrained->string() + " is not an autoencoder checkpoint");
    ModelConfig expect = opt.model;
    expect.armax = ae.config.armax;
    expect.temporal = ae.config.temporal;
    if (ae.config_hash != config_hash(expect))
      fail_config("autoencoder widths do not match the model configuration");
    Autoencoder holder(ae.config, model.ops_ptr(), ae.seed);
    restore_params(ae, holder.params());
    transferred = transfer_autoencoder(holder.params(), model);
  }
  const TrainResult r = train_bptt(model, train, ws.mesh, opt.train, opt.loss, progress);
  Checkpoint c = make_checkpoint("model", opt.model, opt.train.seed, model.scaling(), model.params());
  c.extra = {{"epochs", opt.train.epochs},
             {"lr", opt.train.lr},
             {"lambda", opt.loss.lambda},
             {"max_sequences", opt.train.max_sequences},
             {"transferred_tensors", transferred},
             {"epoch_loss", r.epoch_loss}};
  save_checkpoint(c, checkpoint);
  fs::path log = checkpoint;
  log.replace_filename(checkpoint.stem().string() + "_loss.csv");
  write_training_log(r, log);
  return r;
}

GstModel load_model(const Workspace& ws, const fs::path& checkpoint, const std::optional<ModelConfig>& expected) {
  const Checkpoint c = load_checkpoint(checkpoint);
  if (c.kind != "model") fail_config(checkpoint.string() + " is not a model checkpoint");
  if (expected && config_hash(*expected) != c.config_hash)
    fail_config("checkpoint config hash " + c.config_hash + " does not match the requested configuration " +
                config_hash(*expected));
  GstModel m(c.config, workspace_operators(ws, c.config), c.seed);
  restore_params(c, m.params());
  m.scaling() = c.scaling;
  return m;
}

Prediction predict_signal(const GstModel& m, const Dataset& d, double teacher_fraction) {
  Prediction p;
  p.signal = d.name;
  p.first_frame = kWindow;
  if (m.config().armax) {
    p.switch_frame = teacher_switch_frame(d.frames(), teacher_fraction);
    p.cp = rollout_armax(m, d, teacher_fraction);
  } else {
    p.switch_frame = d.frames();
    p.cp = rollout_feedforward(m, d);
  }
  return p;
}

void save_prediction(const Prediction& p, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string blob = p.signal + "_pred.bin";
  io::Writer w(dir / blob);
  for (const auto& f : p.cp) w.f64s(f);
  w.close();
  write_json({{"format", "gst-prediction"},
              {"version", 1},
              {"signal", p.signal},
              {"first_frame", p.first_frame},
              {"switch_frame", p.switch_frame},
              {"frames", p.cp.size()},
              {"nodes", p.cp.empty() ? 0 : p.cp.front().size()},
              {"blob", blob}},
             dir / (p.signal + "_pred.json"));
}

Prediction load_prediction(const fs::path& manifest) {
  const nlohmann::json m = read_json(manifest);
  Prediction p;
  try {
    p.signal = m.at("signal");
    p.first_frame = m.at("first_frame");
    p.switch_frame = m.at("switch_frame");
    const std::size_t frames = m.at("frames"), nodes = m.at("nodes");
    io::Reader r(manifest.parent_path() / m.at("blob").get<std::string>());
    p.cp.assign(frames, std::vector<double>(nodes));
    for (auto& f : p.cp) r.f64s(f);
    if (!r.at_end()) fail_io("prediction blob for " + p.signal + " has trailing bytes");
  } catch (const nlohmann::json::exception& e) {
    fail_io("prediction manifest " + manifest.string() + " is missing fields: " + e.what());
  }
  return p;
}

HalfSplit split_mape(const MetricsReport& r, std::size_t switch_frame) {
  HalfSplit h;
  std::size_t a = 0, b = 0;
  for (std::size_t k = 0; k < r.step_mape.size(); ++k) {
    if (r.first_step + k < switch_frame) {
      h.teacher_forced += r.step_mape[k];
      ++a;
    } else {
      h.free_running += r.step_mape[k];
      ++b;
    }
  }
  if (a) h.teacher_forced /= static_cast<double>(a);
  if (b) h.free_running /= static_cast<double>(b);
  return h;
}

std::vector<MetricsReport> run_evaluate(const Workspace& ws, const fs::path& pred_dir, const fs::path& report_dir) {
  if (!fs::is_directory(pred_dir)) fail_io("no prediction directory " + pred_dir.string());
  std::vector<fs::path> manifests;
  for (const auto& e : fs::directory_iterator(pred_dir))
    if (e.path().extension() == ".json" && e.path().stem().string().ends_with("_pred")) manifests.push_back(e.path());
  if (manifests.empty()) fail_io("no predictions in " + pred_dir.string());
  std::sort(manifests.begin(), manifests.end());
  const CoefficientRefs refs = mesh_refs(ws.mesh);
  std::vector<MetricsReport> reports;
  nlohmann::json summary = nlohmann::json::object();
  for (const fs::path& m : manifests) {
    const Prediction p = load_prediction(m);
    const Dataset& d = ws.find(p.signal);
    if (p.first_frame + p.cp.size() != d.frames())
      fail_config("prediction for " + p.signal + " does not cover frames " + std::to_string(p.first_frame) + ".." +
                  std::to_string(d.frames() - 1));
    const FieldSeries truth(d.cp.begin() + static_cast<std::ptrdiff_t>(p.first_frame), d.cp.end());
    MetricsReport r = evaluate_series(p.signal, p.cp, truth, ws.mesh, refs, p.first_frame);
    write_report(r, report_dir);
    const HalfSplit h = split_mape(r, p.switch_frame);
    summary[p.signal] = {{"split", to_string(d.split)},
                         {"mape", r.mape},
                         {"r2", r.r2},
                         {"rmse", r.rmse},
                         {"switch_frame", p.switch_frame},
                         {"mape_before_switch", h.teacher_forced},
                         {"mape_after_switch", h.free_running}};
    reports.push_back(std::move(r));
  }
  write_json(summary, report_dir / "summary.json");
  return reports;
}

}  // namespace gst
