#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <sstream>
#include <string>

#include "ccat/checkpoint.hpp"

namespace ccat {
namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_blocks = 1;
  c.d_ffn = 16;
  return c;
}

std::string serialize(const ModelParams<float>& p, const TrainingMetadata& m, const OptimState<float>* st = nullptr) {
  std::ostringstream os(std::ios::binary);
  save_checkpoint(os, p, m, st);
  return os.str();
}

Checkpoint deserialize(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  return load_checkpoint(is);
}

void expect_bit_identical(const ModelParams<float>& a, const ModelParams<float>& b) {
  const auto va = tensor_views(a), vb = tensor_views(b);
  ASSERT_EQ(va.size(), vb.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    ASSERT_EQ(va[i].name, vb[i].name);
    ASSERT_EQ(va[i].size(), vb[i].size());
    EXPECT_EQ(std::memcmp(va[i].data, vb[i].data, sizeof(float) * static_cast<std::size_t>(va[i].size())), 0)
        << va[i].name;
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto p = init_params<float>(ModelConfig{}, 77);
  const TrainingMetadata meta{77, 12345, 1.0};
  const Checkpoint ck = deserialize(serialize(p, meta));
  EXPECT_EQ(ck.params.config, p.config);
  EXPECT_EQ(ck.metadata, meta);
  EXPECT_FALSE(ck.optim.has_value());
  expect_bit_identical(ck.params, p);
}

TEST(Checkpoint, OptimizerStateRoundTrip) {
  const ModelConfig c = tiny();
  auto st = OptimState<float>::zeros(c);
  st.first_moment = init_params<float>(c, 1);
  st.second_moment = init_params<float>(c, 2);
  const Checkpoint ck = deserialize(serialize(init_params<float>(c, 3), {3, 40, 0.5}, &st));
  ASSERT_TRUE(ck.optim.has_value());
  EXPECT_EQ(ck.optim->step, 40u);
  expect_bit_identical(ck.optim->first_moment, st.first_moment);
  expect_bit_identical(ck.optim->second_moment, st.second_moment);
}

TEST(Checkpoint, HeaderLayout) {
  const std::string bytes = serialize(init_params<float>(tiny(), 1), {9, 8, 0.25});
  ASSERT_GE(bytes.size(), 8u + 32u);
  EXPECT_EQ(bytes.substr(0, 4), "CCAT");
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
    return v;
  };
  EXPECT_EQ(u32(4), 1u);   // version
  EXPECT_EQ(u32(8), 14u);  // vocab
  EXPECT_EQ(u32(12), 8u);  // d_model
  EXPECT_EQ(u32(16), 2u);  // heads
  EXPECT_EQ(u32(20), 1u);  // blocks
  EXPECT_EQ(u32(24), 16u);
  EXPECT_EQ(u32(28), 5u);
  EXPECT_EQ(u32(32), 3u);
  EXPECT_EQ(u32(36), 200000u);  // dropout 0.2 in parts per million
  EXPECT_EQ(u32(40), 1u);       // first vocabulary entry: length 1, "P"
  EXPECT_EQ(bytes[44], 'P');
  // Vocabulary entries are 5 bytes each; the 13th ("\n") sits at 40 + 12*5.
  EXPECT_EQ(bytes[40 + 12 * 5 + 4], '\n');
  const std::size_t meta = 40 + 14 * 5;
  EXPECT_EQ(u32(meta), 9u);
  EXPECT_EQ(u32(meta + 8), 8u);
  // First tensor name follows the 24-byte metadata block.
  EXPECT_EQ(u32(meta + 24), 9u);
  EXPECT_EQ(bytes.substr(meta + 28, 9), "embedding");
}

TEST(Checkpoint, TruncationIsAFramingError) {
  const std::string bytes = serialize(init_params<float>(tiny(), 1), {});
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    try {
      deserialize(bytes.substr(0, cut));
      FAIL() << "cut at " << cut << " loaded";
    } catch (const CheckpointError& e) {
      EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
    }
  }
}

TEST(Checkpoint, RejectsBadMagicVersionAndVocabulary) {
  const std::string good = serialize(init_params<float>(tiny(), 1), {});
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize(bad_magic), CheckpointError);

  std::string bumped = good;
  bumped[4] = 2;
  try {
    deserialize(bumped);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos) << e.what();
  }

  std::string swapped = good;
  std::swap(swapped[44], swapped[49]);  // "P" and "S" trade ids
  try {
    deserialize(swapped);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("vocabulary"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, RefusesNonFiniteValues) {
  auto p = init_params<float>(tiny(), 1);
  p.blocks[0].w1(0, 0) = std::numeric_limits<float>::quiet_NaN();
  std::ostringstream os;
  EXPECT_THROW(save_checkpoint(os, p, {}), CheckpointError);
}

TEST(Checkpoint, FileRoundTripAndMissingFile) {
  const auto p = init_params<float>(tiny(), 5);
  const std::string path = ::testing::TempDir() + "ccat_roundtrip.ckpt";
  save_checkpoint(path, p, {5, 1, 0.0});
  expect_bit_identical(load_checkpoint(path).params, p);
  EXPECT_THROW(load_checkpoint(path + ".missing"), CheckpointError);
}

}  // namespace
}  // namespace ccat
