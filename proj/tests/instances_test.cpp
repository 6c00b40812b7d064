#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "ccat/instances.hpp"
#include "ccat/reference_adder.hpp"

namespace ccat {
namespace {

std::string in(const TrainingInstance& i) { return decode(i.input); }
std::string tg(const TrainingInstance& i) { return decode(i.target); }

TEST(Instances, FirstTypeExamples) {
  EXPECT_EQ(in(make_first_type(6, 9)), "69PPP");
  EXPECT_EQ(tg(make_first_type(6, 9)), "15S");
  EXPECT_EQ(in(make_first_type(1, 2)), "12PPP");
  EXPECT_EQ(tg(make_first_type(1, 2)), "3SP");
  EXPECT_EQ(in(make_first_type(0, 0)), "00PPP");
  EXPECT_EQ(tg(make_first_type(0, 0)), "0SP");
  EXPECT_EQ(make_first_type(8, 3).kind, InstanceKind::kFirstType);
  EXPECT_THROW(make_first_type(10, 0), std::invalid_argument);
}

TEST(Instances, SecondTypeExamples) {
  auto check = [](int prev, std::vector<int> next, const char* input, const char* target) {
    const auto inst = make_second_type(prev, next);
    EXPECT_EQ(in(inst), input);
    EXPECT_EQ(tg(inst), target);
    EXPECT_EQ(inst.kind, InstanceKind::kSecondType);
  };
  check(11, {7, 1}, "11C71", "9SP");
  check(15, {2, 9}, "15C29", "12S");
  check(14, {6}, "14C6P", "7SP");
  check(3, {1, 4}, "3C14P", "5SP");
  EXPECT_THROW(make_second_type(20, {1}), std::invalid_argument);
  EXPECT_THROW(make_second_type(1, {}), std::invalid_argument);
  EXPECT_THROW(make_second_type(1, {1, 2, 3}), std::invalid_argument);
}

TEST(Instances, SecondTypeFromOperands) {
  EXPECT_EQ(in(second_type_from_operands(99, 89)), "18C98");
  EXPECT_EQ(tg(second_type_from_operands(99, 89)), "18S");
  EXPECT_EQ(in(second_type_from_operands(78, 13)), "11C71");
  EXPECT_EQ(in(second_type_from_operands(14, 6)), "10C1P");
  EXPECT_THROW(second_type_from_operands(3, 4), std::invalid_argument);
}

TEST(Instances, SampledRunsContainWorkedInstances) {
  MixConfig mix;
  InstanceRng rng(2024);
  bool saw_18c98 = false, saw_83 = false;
  for (const auto& inst : sample_batch(mix, 200000, rng)) {
    if (in(inst) == "18C98") {
      saw_18c98 = true;
      EXPECT_EQ(tg(inst), "18S");
    }
    if (in(inst) == "83PPP") {
      saw_83 = true;
      EXPECT_EQ(tg(inst), "11S");
    }
  }
  EXPECT_TRUE(saw_18c98);
  EXPECT_TRUE(saw_83);
}

// 1e5 draws at p = 0.5: sigma = sqrt(n p (1-p)) = 158.1; 3 sigma = 474.
TEST(Instances, MixFractionWithinBinomialBound) {
  MixConfig mix;
  mix.rng_seed = 99;
  InstanceRng rng(mix.rng_seed);
  const std::size_t n = 100000;
  std::size_t first = 0;
  for (const auto& inst : sample_batch(mix, n, rng)) first += inst.kind == InstanceKind::kFirstType ? 1 : 0;
  const double sigma = std::sqrt(n * 0.25);
  EXPECT_LE(std::abs(static_cast<double>(first) - n * 0.5), 3 * sigma);
}

TEST(Instances, DegenerateMixes) {
  MixConfig all_second{1.0, 5};
  InstanceRng r1(5);
  for (const auto& inst : sample_batch(all_second, 100, r1)) EXPECT_EQ(inst.kind, InstanceKind::kSecondType);
  MixConfig all_first{0.0, 5};
  InstanceRng r2(5);
  for (const auto& inst : sample_batch(all_first, 100, r2)) EXPECT_EQ(inst.kind, InstanceKind::kFirstType);
  InstanceRng r3(5);
  EXPECT_THROW(sample_batch(all_first, 0, r3), std::invalid_argument);
  EXPECT_THROW((MixConfig{1.5, 0}.validate()), std::invalid_argument);
}

TEST(Instances, BatchesAreDeterministic) {
  MixConfig mix;
  InstanceRng a(17), b(17), c(18);
  const auto ba = sample_batch(mix, 512, a);
  EXPECT_EQ(ba, sample_batch(mix, 512, b));
  EXPECT_NE(ba, sample_batch(mix, 512, c));
}

TEST(Instances, FaithfulSamplerNeverExceedsPrevSum18) {
  MixConfig mix{1.0, 123};
  InstanceRng rng(123);
  std::set<std::string> prefixes;
  for (int i = 0; i < 1000000; ++i) {
    const auto inst = sample_instance(mix, rng);
    const std::string s = in(inst);
    const int prev = std::stoi(s.substr(0, s.find('C')));
    ASSERT_LE(prev, 18) << s;
    prefixes.insert(s.substr(0, s.find('C')));
  }
  EXPECT_EQ(prefixes.size(), 19u);  // 0..18 all reachable
}

// Zero tens digits occur inside long numbers, so "0C01" and "1C0" must be
// training inputs too. Every one of the 2190 prev_sum <= 18 inputs is reachable.
TEST(Instances, FaithfulSamplerCoversWholeReachableSpace) {
  MixConfig mix{0.5, 8};
  InstanceRng rng(8);
  std::set<std::string> seen;
  for (int i = 0; i < 1000000; ++i) {
    std::string s = in(sample_instance(mix, rng));
    s.erase(s.find_last_not_of('P') + 1);
    seen.insert(s);
  }
  std::set<std::string> space;
  for (const auto& c : enumerate_stage_space(18)) space.insert(c.input);
  EXPECT_EQ(seen, space);
  EXPECT_EQ(in(second_type_from_columns(0, 1, 0, 0)), "1C00P");
  EXPECT_EQ(in(second_type_from_columns(0, 1, -1, 0)), "1C0PP");
  EXPECT_THROW(second_type_from_columns(-1, 1, -1, 2), std::invalid_argument);
}

TEST(Instances, UniformStageSpaceReaches19) {
  MixConfig mix{1.0, 4, true};
  InstanceRng rng(4);
  bool saw19 = false;
  for (const auto& inst : sample_batch(mix, 20000, rng)) saw19 |= in(inst).starts_with("19C");
  EXPECT_TRUE(saw19);
}

TEST(Instances, PaddedShapes) {
  InstanceRng rng(1);
  for (const auto& inst : sample_batch(MixConfig{}, 1000, rng)) {
    ASSERT_EQ(inst.input.size(), kInputLen);
    ASSERT_EQ(inst.target.size(), kTargetLen);
    ASSERT_NE(inst.input.ids.front(), token::kPad);
  }
}

TEST(StageSpace, Counts) {
  EXPECT_EQ(enumerate_stage_space(18).size(), 2190u);
  EXPECT_EQ(enumerate_stage_space(19).size(), 2300u);
  EXPECT_THROW(enumerate_stage_space(20), std::invalid_argument);
}

TEST(StageSpace, EntryFor19C99) {
  const auto space = enumerate_stage_space(19);
  const auto it = std::find_if(space.begin(), space.end(), [](const StageCase& c) { return c.input == "19C99"; });
  ASSERT_NE(it, space.end());
  EXPECT_EQ(it->target, "19S");
  // 999 + 999: the third stage sees "19C99".
  const auto stages = decompose_stages(DigitString("999"), DigitString("999"));
  EXPECT_EQ(stages[2].input.text(), "19C99");
  EXPECT_EQ(stages[2].target.text(), "19S");
}

// Instance targets agree with the reference adder's stage rule everywhere.
TEST(StageSpace, AgreesWithReferenceAdder) {
  std::set<std::string> inputs;
  for (const auto& c : enumerate_stage_space(19)) {
    ASSERT_EQ(exact_stage_target(c.input).text(), c.target) << c.input;
    inputs.insert(c.input);
  }
  EXPECT_EQ(inputs.size(), 2300u);
}

TEST(Instances, DumpFormat) {
  std::ostringstream os;
  dump_instances(os, {make_first_type(6, 9), make_second_type(3, {1, 4})});
  EXPECT_EQ(os.str(), "69PPP\t15S\tfirst\n3C14P\t5SP\tsecond\n");
}

}  // namespace
}  // namespace ccat
