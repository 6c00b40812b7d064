#pragma once

// Training instances of the two kinds, seeded sampling, and the exhaustive
// stage-input space used for evaluation.

#include <cstdint>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccat/vocab.hpp"

namespace ccat {

enum class InstanceKind : std::uint8_t { kFirstType, kSecondType };

inline const char* to_string(InstanceKind kind) {
  return kind == InstanceKind::kFirstType ? "first" : "second";
}

struct TrainingInstance {
  TokenSeq input;   // length 5
  TokenSeq target;  // length 3
  InstanceKind kind = InstanceKind::kFirstType;

  friend bool operator==(const TrainingInstance&, const TrainingInstance&) = default;
};

struct MixConfig {
  double second_type_fraction = 0.5;
  std::uint64_t rng_seed = 0;
  // Draw second-type inputs uniformly over the full stage space, prev_sum up
  // to 19 included, instead of deriving them from two-digit additions.
  bool uniform_stage_space = false;

  void validate() const {
    if (!(second_type_fraction >= 0.0 && second_type_fraction <= 1.0)) {
      throw std::invalid_argument("second_type_fraction must lie in [0,1]");
    }
  }
};

using InstanceRng = std::mt19937_64;

namespace detail {
inline std::string sum_text(int sum) { return std::to_string(sum) + "S"; }
}  // namespace detail

inline TrainingInstance make_first_type(int d1, int d2) {
  if (d1 < 0 || d1 > 9 || d2 < 0 || d2 > 9) throw std::invalid_argument("digits must lie in [0,9]");
  std::string in{static_cast<char>('0' + d1), static_cast<char>('0' + d2)};
  return TrainingInstance{pad_input(encode(in)), pad_target(encode(detail::sum_text(d1 + d2))),
                          InstanceKind::kFirstType};
}

inline TrainingInstance make_second_type(int prev_sum, const std::vector<int>& next) {
  if (prev_sum < 0 || prev_sum > 19) throw std::invalid_argument("prev_sum must lie in [0,19]");
  if (next.empty() || next.size() > 2) throw std::invalid_argument("need one or two next digits");
  std::string in = std::to_string(prev_sum) + "C";
  int sum = prev_sum >= 10 ? 1 : 0;
  for (int d : next) {
    if (d < 0 || d > 9) throw std::invalid_argument("digits must lie in [0,9]");
    in.push_back(static_cast<char>('0' + d));
    sum += d;
  }
  return TrainingInstance{pad_input(encode(in)), pad_target(encode(detail::sum_text(sum))),
                          InstanceKind::kSecondType};
}

// Second stage of a + b for operands in [0,99] with at least one of them >= 10.
inline TrainingInstance second_type_from_operands(int a, int b) {
  if (a < 0 || a > 99 || b < 0 || b > 99 || (a < 10 && b < 10)) {
    throw std::invalid_argument("operands must lie in [0,99] with one of them >= 10");
  }
  std::vector<int> next;
  if (a >= 10) next.push_back(a / 10);
  if (b >= 10) next.push_back(b / 10);
  return make_second_type(a % 10 + b % 10, next);
}

// Second stage for two digit columns of one or two digits each; a tens digit
// of -1 marks a one-digit operand. A tens digit may be 0, as it is inside a
// longer number, so "3C05" and "1C0" are reachable.
inline TrainingInstance second_type_from_columns(int a_tens, int a_units, int b_tens, int b_units) {
  if (a_tens < 0 && b_tens < 0) throw std::invalid_argument("one operand needs two digits");
  std::vector<int> next;
  if (a_tens >= 0) next.push_back(a_tens);
  if (b_tens >= 0) next.push_back(b_tens);
  return make_second_type(a_units + b_units, next);
}

inline constexpr double kTwoDigitOperandProb = 0.9;

inline TrainingInstance sample_instance(const MixConfig& mix, InstanceRng& rng) {
  std::bernoulli_distribution second(mix.second_type_fraction);
  std::uniform_int_distribution<int> digit(0, 9);
  if (!second(rng)) {
    const int d1 = digit(rng);
    const int d2 = digit(rng);
    return make_first_type(d1, d2);
  }
  if (mix.uniform_stage_space) {
    std::uniform_int_distribution<int> prev(0, 19);
    std::uniform_int_distribution<int> cont(0, 109);
    const int p = prev(rng);
    const int c = cont(rng);
    if (c < 100) return make_second_type(p, {c / 10, c % 10});
    return make_second_type(p, {c - 100});
  }
  // Each operand has two digits with probability 0.9, at least one does.
  std::bernoulli_distribution two_digits(kTwoDigitOperandProb);
  bool a_long = false, b_long = false;
  while (!a_long && !b_long) {
    a_long = two_digits(rng);
    b_long = two_digits(rng);
  }
  const int a_tens = a_long ? digit(rng) : -1;
  const int a_units = digit(rng);
  const int b_tens = b_long ? digit(rng) : -1;
  const int b_units = digit(rng);
  return second_type_from_columns(a_tens, a_units, b_tens, b_units);
}

inline std::vector<TrainingInstance> sample_batch(const MixConfig& mix, std::size_t n,
                                                  InstanceRng& rng) {
  if (n == 0) throw std::invalid_argument("batch size must be >= 1");
  std::vector<TrainingInstance> batch;
  batch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) batch.push_back(sample_instance(mix, rng));
  return batch;
}

struct StageCase {
  std::string input;   // unpadded stage input text
  std::string target;  // expected output, S-terminated, unpadded
};

// 100 first-type inputs, then prev_sum in [0, max_prev_sum] crossed with the
// 100 two-digit and 10 one-digit continuations.
inline std::vector<StageCase> enumerate_stage_space(int max_prev_sum) {
  if (max_prev_sum < 0 || max_prev_sum > 19) {
    throw std::invalid_argument("max_prev_sum must lie in [0,19]");
  }
  std::vector<StageCase> cases;
  cases.reserve(100 + 110 * static_cast<std::size_t>(max_prev_sum + 1));
  auto add = [&](const TrainingInstance& inst) {
    std::string in = decode(inst.input);
    std::string tg = decode(inst.target);
    in.erase(in.find_last_not_of('P') + 1);
    tg.erase(tg.find_last_not_of('P') + 1);
    cases.push_back(StageCase{std::move(in), std::move(tg)});
  };
  for (int d1 = 0; d1 < 10; ++d1) {
    for (int d2 = 0; d2 < 10; ++d2) add(make_first_type(d1, d2));
  }
  for (int p = 0; p <= max_prev_sum; ++p) {
    for (int d1 = 0; d1 < 10; ++d1) {
      for (int d2 = 0; d2 < 10; ++d2) add(make_second_type(p, {d1, d2}));
    }
    for (int d = 0; d < 10; ++d) add(make_second_type(p, {d}));
  }
  return cases;
}

// One instance per line: INPUT<TAB>TARGET<TAB>KIND.
inline void dump_instances(std::ostream& os, const std::vector<TrainingInstance>& instances) {
  for (const auto& inst : instances) {
    os << escape_newlines(decode(inst.input)) << '\t' << escape_newlines(decode(inst.target))
       << '\t' << to_string(inst.kind) << '\n';
  }
}

}  // namespace ccat
