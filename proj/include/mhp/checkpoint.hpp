#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "mhp/model.hpp"

namespace mhp {

void to_json(nlohmann::json& j, const ModelConfig& c);
// Missing keys keep their defaults for the given (or default) arch.
void from_json(const nlohmann::json& j, ModelConfig& c);

struct CheckpointInfo {
  std::uint64_t seed = 0;
  double time_scale = 1.0;  // timestamps were divided by this before training
  std::size_t epoch = 0;
  double dev_ll_per_event = 0.0;
};

struct LoadedCheckpoint {
  Model model;
  CheckpointInfo info;
};

// Self-describing JSON document: format tag, model config, run info, and
// a map from parameter name to {shape, values}. Doubles are written in
// shortest round-trip form, so reloading is bit-exact.
nlohmann::json checkpoint_json(const Model& model, const CheckpointInfo& info);
LoadedCheckpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::string& path, const Model& model, const CheckpointInfo& info);
// Throws DataError if the file is missing or malformed.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace mhp
