#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mhp/checkpoint.hpp"
#include "mhp/error.hpp"

namespace mhp {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

ModelConfig small_config(Arch arch) {
  ModelConfig c = ModelConfig::defaults(arch);
  c.num_types = 3;
  c.d_model = 8;
  c.d_state = 4;
  c.attn_blocks = 1;
  c.n_heads = 2;
  c.time_loss_weight = 0.25;
  c.delta.raw = true;
  return c;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  for (Arch arch : {Arch::mhp, Arch::mhp_e}) {
    const Model model(small_config(arch), 42);
    const auto path = temp_path("mhp_ckpt_" + to_string(arch) + ".json");
    CheckpointInfo info{42, 2.5, 7, -1.25};
    save_checkpoint(path, model, info);
    const auto loaded = load_checkpoint(path);
    EXPECT_EQ(loaded.model.config().arch, arch);
    EXPECT_EQ(loaded.model.config().d_model, 8u);
    EXPECT_TRUE(loaded.model.config().delta.raw);
    EXPECT_DOUBLE_EQ(loaded.model.config().time_loss_weight, 0.25);
    EXPECT_EQ(loaded.info.epoch, 7u);
    EXPECT_EQ(loaded.info.time_scale, 2.5);
    EXPECT_EQ(loaded.model.parameters().snapshot(), model.parameters().snapshot());

    const EventSequence seq{{0.3, 0.8, 2.0}, {1, 3, 2}, 3};
    EXPECT_EQ(loaded.model.encode(seq).to_vector(), model.encode(seq).to_vector());
    std::filesystem::remove(path);
  }
}

TEST(Checkpoint, RejectsMissingAndMalformedFiles) {
  EXPECT_THROW(load_checkpoint(temp_path("mhp_does_not_exist.json")), DataError);
  const auto path = temp_path("mhp_bad_ckpt.json");
  {
    std::ofstream(path) << "{\"format\": \"something-else\"}";
  }
  EXPECT_THROW(load_checkpoint(path), DataError);
  {
    std::ofstream(path) << "{ not json";
  }
  EXPECT_THROW(load_checkpoint(path), DataError);

  const Model model(small_config(Arch::mhp), 1);
  auto doc = checkpoint_json(model, {});
  doc["parameters"]["intensity.b"]["shape"] = {4};
  EXPECT_THROW(checkpoint_from_json(doc), DataError);
  doc = checkpoint_json(model, {});
  doc["parameters"].erase("predict.P_e");
  EXPECT_THROW(checkpoint_from_json(doc), DataError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace mhp
