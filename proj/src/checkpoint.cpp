#include "mhp/checkpoint.hpp"

#include <fstream>

#include "mhp/error.hpp"

namespace mhp {

namespace {
constexpr const char* kFormat = "mamba-hawkes-checkpoint";
constexpr int kVersion = 1;
}  // namespace

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{
      {"arch", to_string(c.arch)},
      {"num_types", c.num_types},
      {"d_model", c.d_model},
      {"d_state", c.d_state},
      {"d_conv", c.d_conv},
      {"expand", c.expand},
      {"n_layers", c.n_layers},
      {"mlp_hidden", c.mlp_hidden},
      {"mc_samples", c.mc_samples},
      {"event_loss_weight", c.event_loss_weight},
      {"time_loss_weight", c.time_loss_weight},
      {"raw_delta", c.delta.raw},
      {"delta_min", c.delta.min},
      {"delta_max", c.delta.max},
      {"total_intensity_loglik", c.total_intensity_loglik},
      {"attn_blocks", c.attn_blocks},
      {"n_heads", c.n_heads},
      {"ff_width", c.ff_width},
  };
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (j.contains("arch")) c = ModelConfig::defaults(parse_arch(j.at("arch").get<std::string>()));
  auto read = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  read("num_types", c.num_types);
  read("d_model", c.d_model);
  read("d_state", c.d_state);
  read("d_conv", c.d_conv);
  read("expand", c.expand);
  read("n_layers", c.n_layers);
  read("mlp_hidden", c.mlp_hidden);
  read("mc_samples", c.mc_samples);
  read("event_loss_weight", c.event_loss_weight);
  read("time_loss_weight", c.time_loss_weight);
  read("raw_delta", c.delta.raw);
  read("delta_min", c.delta.min);
  read("delta_max", c.delta.max);
  read("total_intensity_loglik", c.total_intensity_loglik);
  read("attn_blocks", c.attn_blocks);
  read("n_heads", c.n_heads);
  read("ff_width", c.ff_width);
}

nlohmann::json checkpoint_json(const Model& model, const CheckpointInfo& info) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& p : model.parameters().all()) {
    params[p.name] = {{"shape", p.tensor.shape()}, {"values", p.tensor.to_vector()}};
  }
  return {
      {"format", kFormat},
      {"version", kVersion},
      {"config", model.config()},
      {"seed", info.seed},
      {"time_scale", info.time_scale},
      {"epoch", info.epoch},
      {"dev_ll_per_event", info.dev_ll_per_event},
      {"parameters", std::move(params)},
  };
}

LoadedCheckpoint checkpoint_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string{}) != kFormat) {
      throw DataError("not a mamba-hawkes checkpoint");
    }
    if (doc.at("version").get<int>() != kVersion) {
      throw DataError("unsupported checkpoint version " + doc.at("version").dump());
    }
    const auto config = doc.at("config").get<ModelConfig>();
    CheckpointInfo info;
    info.seed = doc.at("seed").get<std::uint64_t>();
    info.time_scale = doc.at("time_scale").get<double>();
    info.epoch = doc.at("epoch").get<std::size_t>();
    info.dev_ll_per_event = doc.at("dev_ll_per_event").get<double>();

    Model model(config, info.seed);
    std::map<std::string, std::vector<double>> values;
    const auto& params = doc.at("parameters");
    for (const auto& p : model.parameters().all()) {
      if (!params.contains(p.name)) throw DataError("checkpoint lacks parameter " + p.name);
      const auto& entry = params.at(p.name);
      if (entry.at("shape").get<Shape>() != p.tensor.shape()) {
        throw DataError("parameter " + p.name + " has shape " + entry.at("shape").dump() +
                        ", expected " + shape_str(p.tensor.shape()));
      }
      values[p.name] = entry.at("values").get<std::vector<double>>();
    }
    if (params.size() != values.size()) throw DataError("checkpoint has unknown parameters");
    model.parameters().assign(values);
    return {std::move(model), info};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid checkpoint config: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Model& model, const CheckpointInfo& info) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out << checkpoint_json(model, info).dump() << '\n';
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace mhp
