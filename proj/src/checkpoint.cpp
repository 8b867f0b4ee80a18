#include "gst/checkpoint.hpp"

#include <fstream>

#include "gst/binary_io.hpp"
#include "gst/error.hpp"

namespace gst {
namespace {

std::filesystem::path blob_path(const std::filesystem::path& header) {
  std::filesystem::path p = header;
  p.replace_extension(".bin");
  return p;
}

}  // namespace

Checkpoint make_checkpoint(const std::string& kind, const ModelConfig& config, std::uint64_t seed,
                           const InputScaling& scaling, const ParamStore& params) {
  Checkpoint c;
  c.kind = kind;
  c.config = config;
  c.config_hash = config_hash(config);
  c.seed = seed;
  c.scaling = scaling;
  for (ParamId id = 0; id < params.size(); ++id) {
    c.names.push_back(params.name(id));
    c.shapes.push_back(params.value(id).shape());
  }
  c.values = params.flatten();
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path blob = blob_path(path);
  if (blob == path) fail_config("checkpoint path must not end in .bin: " + path.string());
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < c.names.size(); ++i) params.push_back({{"name", c.names[i]}, {"shape", c.shapes[i]}});
  nlohmann::json h = {{"format", "gst-checkpoint"},
                      {"version", kCheckpointVersion},
                      {"kind", c.kind},
                      {"config", to_json(c.config)},
                      {"config_hash", c.config_hash},
                      {"seed", c.seed},
                      {"scaling", to_json(c.scaling)},
                      {"extra", c.extra},
                      {"param_count", c.values.size()},
                      {"params", params},
                      {"blob", blob.filename().string()}};
  io::Writer w(blob);
  w.f64s(c.values);
  w.close();
  std::ofstream out(path);
  if (!out) fail_io("cannot write checkpoint " + path.string());
  out << h.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open checkpoint " + path.string());
  nlohmann::json h;
  try {
    in >> h;
  } catch (const nlohmann::json::exception& e) {
    fail_io("malformed checkpoint header " + path.string() + ": " + e.what());
  }
  Checkpoint c;
  try {
    if (h.at("format") != "gst-checkpoint") fail_io(path.string() + " is not a checkpoint");
    if (h.at("version").get<int>() != kCheckpointVersion)
      fail_config("checkpoint version " + h.at("version").dump() + " is not supported");
    c.kind = h.at("kind");
    c.config = model_config_from_json(h.at("config"));
    c.config_hash = h.at("config_hash");
    if (c.config_hash != config_hash(c.config)) fail_config("checkpoint config hash does not match its config");
    c.seed = h.at("seed");
    c.scaling = input_scaling_from_json(h.at("scaling"));
    c.extra = h.at("extra");
    for (const auto& p : h.at("params")) {
      c.names.push_back(p.at("name"));
      c.shapes.push_back(p.at("shape").get<std::vector<std::size_t>>());
    }
    c.values.resize(h.at("param_count").get<std::size_t>());
    io::Reader r(path.parent_path() / h.at("blob").get<std::string>());
    r.f64s(c.values);
    if (!r.at_end()) fail_io("checkpoint blob has trailing bytes");
  } catch (const nlohmann::json::exception& e) {
    fail_io("checkpoint header " + path.string() + " is missing fields: " + e.what());
  }
  return c;
}

void restore_params(const Checkpoint& c, ParamStore& params) {
  if (c.names.size() != params.size())
    fail_config("checkpoint has " + std::to_string(c.names.size()) + " tensors, model has " +
                std::to_string(params.size()));
  for (ParamId id = 0; id < params.size(); ++id)
    if (c.names[id] != params.name(id) || c.shapes[id] != params.value(id).shape())
      fail_config("checkpoint tensor " + c.names[id] + " does not match model tensor " + params.name(id));
  params.assign(c.values);
}

}  // namespace gst
