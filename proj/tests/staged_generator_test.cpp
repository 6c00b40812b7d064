#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "ccat/staged_generator.hpp"
#include "test_models.hpp"

namespace ccat {
namespace {

using Stages = std::vector<TraceStage>;

TEST(ExactSolver, WorkedTraces) {
  ExactStageSolver exact;
  const auto t1 = add_with_model(exact, DigitString("65785"), DigitString("8765"));
  EXPECT_EQ(t1.stages, (Stages{{"55", "10S"}, {"10C86", "15S"}, {"15C77", "15S"}, {"15C58", "14S"}, {"14C6", "7S"}}));
  EXPECT_EQ(t1.final_answer.str(), "74550");
  const auto t2 = add_with_model(exact, DigitString("9582"), DigitString("9261"));
  EXPECT_EQ(t2.stages, (Stages{{"21", "3S"}, {"3C86", "14S"}, {"14C52", "8S"}, {"8C99", "18S"}}));
  EXPECT_EQ(t2.final_answer.str(), "18843");
  const auto t0 = add_with_model(exact, DigitString("0"), DigitString("0"));
  EXPECT_EQ(t0.stages, (Stages{{"00", "0S"}}));
  EXPECT_EQ(t0.final_answer.str(), "0");
}

TEST(ExactSolver, RenderedTrace) {
  ExactStageSolver exact;
  const auto t = add_with_model(exact, DigitString("9582"), DigitString("9261"));
  EXPECT_EQ(render_trace(t),
            "1) INPUT: 21 OUTPUTS: 3S\n"
            "2) INPUT: 3C86 OUTPUTS: 14S\n"
            "3) INPUT: 14C52 OUTPUTS: 8S\n"
            "4) INPUT: 8C99 OUTPUTS: 18S\n"
            "Final answer: 18843\n");
}

// With exact stages, chaining and collation reproduce school addition for
// every pair below 1000.
TEST(ExactSolver, OracleSubstitutionExhaustive) {
  ExactStageSolver exact;
  for (int a = 0; a < 1000; ++a) {
    const DigitString da(std::to_string(a));
    for (int b = 0; b < 1000; ++b) {
      const DigitString db(std::to_string(b));
      const auto t = add_with_model(exact, da, db);
      ASSERT_EQ(t.final_answer.str(), std::to_string(a + b));
      ASSERT_EQ(t.stages.size(), std::max(da.size(), db.size()));
    }
  }
}

TEST(Verify, FiftyDigitPairWithExactStages) {
  ExactStageSolver exact;
  const auto v = verify_addition(exact, DigitString("89675627969177656514819490691831725109908874980671"),
                                 DigitString("32029996942446258125998499183326035828805968783222"));
  EXPECT_TRUE(v.match);
  EXPECT_EQ(v.predicted, "121705624911623914640817989875157760938714843763893");
}

// Replays scripted outputs and records what it was asked.
struct ScriptedSolver {
  std::vector<StageOutput> script;
  std::vector<std::string> seen;
  StageOutput solve(std::string_view in) {
    seen.emplace_back(in);
    return script.at(seen.size() - 1);
  }
};

TEST(Chaining, ModelOutputFeedsNextStageVerbatim) {
  // A wrong first stage ("11" for 5+5) must be chained, not corrected.
  ScriptedSolver s{{{"11", true}, {"15", true}, {"15", true}, {"14", true}, {"7", true}}, {}};
  const auto t = add_with_model(s, DigitString("65785"), DigitString("8765"));
  EXPECT_EQ(s.seen, (std::vector<std::string>{"55", "11C86", "15C77", "15C58", "14C6"}));
  EXPECT_EQ(t.final_answer.str(), "74551");
}

TEST(Chaining, MalformedOutputCarriesPartialTrace) {
  ScriptedSolver s{{{"3", true}, {"1", false}}, {}};
  try {
    add_with_model(s, DigitString("9582"), DigitString("9261"));
    FAIL() << "expected MalformedOutput";
  } catch (const MalformedOutput& e) {
    EXPECT_EQ(e.partial_trace().stages, (Stages{{"21", "3S"}, {"3C86", "1"}}));
  }
  ScriptedSolver leading_zero{{{"05", true}}, {}};
  EXPECT_THROW(add_with_model(leading_zero, DigitString("4"), DigitString("1")), MalformedOutput);
  ScriptedSolver letters{{{"1P", true}}, {}};
  EXPECT_THROW(add_with_model(letters, DigitString("4"), DigitString("1")), MalformedOutput);
}

TEST(Verify, CorruptedModelIsReportedAsMismatch) {
  const auto zeros = zeros_like<float>(ModelConfig{});
  ModelStageSolver<float> solver(zeros);
  const auto v = verify_addition(solver, DigitString("1"), DigitString("2"));
  EXPECT_FALSE(v.match);
  EXPECT_EQ(v.expected.str(), "3");
  EXPECT_TRUE(v.predicted.empty());
  EXPECT_NE(v.diagnostic.find("malformed"), std::string::npos) << v.diagnostic;
  ASSERT_EQ(v.trace.stages.size(), 1u);
  EXPECT_EQ(v.trace.stages[0].output, "PPP");  // all-zero logits tie toward id 0
}

TEST(Verify, WrongButWellFormedModel) {
  const auto p = testing::constant_output_model<float>(token::digit(7));
  ModelStageSolver<float> solver(p);
  const auto v = verify_addition(solver, DigitString("12"), DigitString("30"));
  EXPECT_FALSE(v.match);
  EXPECT_EQ(v.predicted, "77");
  EXPECT_EQ(v.expected.str(), "42");
  EXPECT_EQ(render_trace(v.trace, false), "1) INPUT: 20 OUTPUTS: 7S\n2) INPUT: 7C13 OUTPUTS: 7S\n");
}

TEST(ModelSolver, MemoizedMatchesDirect) {
  const auto p = init_params<float>(ModelConfig{}, 12);
  ModelStageSolver<float> memo(p, true), direct(p, false);
  std::mt19937_64 rng(1);
  const auto space = enumerate_stage_space(19);
  std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
  for (int i = 0; i < 300; ++i) {
    const auto& in = space[pick(rng)].input;
    ASSERT_EQ(memo.solve(in), direct.solve(in)) << in;
  }
  EXPECT_LE(memo.memo_size(), 300u);
  EXPECT_EQ(generate_stage(p, "15C29"), direct.solve("15C29"));
}

TEST(ModelSolver, TraceIsReproducible) {
  const auto p = testing::constant_output_model<float>(token::digit(1));
  ModelStageSolver<float> s1(p, false), s2(p, false);
  const auto a = add_with_model(s1, DigitString("123456"), DigitString("987"));
  const auto b = add_with_model(s2, DigitString("123456"), DigitString("987"));
  EXPECT_EQ(a.stages, b.stages);
  EXPECT_EQ(a.stages.size(), 6u);
}

}  // namespace
}  // namespace ccat
