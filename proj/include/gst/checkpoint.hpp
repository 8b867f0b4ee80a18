#pragma once

// Checkpoint = JSON header (<path>) + little-endian f64 parameter blob
// (<path> with extension .bin) in registry order.

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "gst/autodiff.hpp"
#include "gst/model.hpp"

namespace gst {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string kind;  // "model" or "autoencoder"
  ModelConfig config;
  std::string config_hash;
  std::uint64_t seed = 0;
  InputScaling scaling;
  nlohmann::json extra = nlohmann::json::object();
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> shapes;
  std::vector<double> values;
};

Checkpoint make_checkpoint(const std::string& kind, const ModelConfig& config, std::uint64_t seed,
                           const InputScaling& scaling, const ParamStore& params);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies values into a store whose names and shapes must match exactly.
void restore_params(const Checkpoint& c, ParamStore& params);

}  // namespace gst
