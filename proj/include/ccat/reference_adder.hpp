#pragma once

// Exact, model-free ground truth: school addition, the per-stage decomposition
// used by the generator, and collation of stage outputs into the final answer.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ccat/errors.hpp"

namespace ccat {

// Non-negative decimal integer, most significant digit first, no leading zeros.
class DigitString {
 public:
  DigitString() : digits_("0") {}

  explicit DigitString(std::string digits) : digits_(std::move(digits)) { validate(digits_); }

  static void validate(std::string_view s) {
    if (s.empty()) throw InvalidDigits("empty digit string");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') {
        throw InvalidDigits("invalid character '" + std::string(1, s[i]) + "' at position " +
                            std::to_string(i) + " in digit string");
      }
    }
    if (s.size() > 1 && s.front() == '0') {
      throw InvalidDigits("leading zero in digit string \"" + std::string(s.substr(0, 16)) +
                          (s.size() > 16 ? "..." : "") + "\"");
    }
  }

  const std::string& str() const noexcept { return digits_; }
  std::size_t size() const noexcept { return digits_.size(); }

  // k-th least significant digit; k must be < size().
  int digit_from_right(std::size_t k) const { return digits_[digits_.size() - 1 - k] - '0'; }

  friend bool operator==(const DigitString&, const DigitString&) = default;

 private:
  std::string digits_;
};

inline DigitString add_digit_strings(const DigitString& a, const DigitString& b) {
  const std::size_t n = std::max(a.size(), b.size());
  std::string out(n + 1, '0');
  int carry = 0;
  for (std::size_t k = 0; k < n; ++k) {
    int s = carry;
    if (k < a.size()) s += a.digit_from_right(k);
    if (k < b.size()) s += b.digit_from_right(k);
    out[n - k] = static_cast<char>('0' + s % 10);
    carry = s / 10;
  }
  if (carry != 0) {
    out[0] = '1';
    return DigitString(std::move(out));
  }
  return DigitString(out.substr(1));
}

enum class StageKind : std::uint8_t { kFirst, kContinuation };

// One stage's input. For the first stage `digits` holds the two units digits.
// For a continuation, `prev_output` is the previous stage's output text verbatim
// (its digit count encodes the carry) and `digits` holds one or two next digits.
struct StageInput {
  StageKind kind = StageKind::kFirst;
  std::string prev_output;
  std::vector<int> digits;

  std::string text() const {
    std::string t;
    if (kind == StageKind::kContinuation) {
      t = prev_output;
      t.push_back('C');
    }
    for (int d : digits) t.push_back(static_cast<char>('0' + d));
    return t;
  }

  friend bool operator==(const StageInput&, const StageInput&) = default;
};

struct StageTarget {
  int sum_value = 0;

  std::string digits() const { return std::to_string(sum_value); }
  std::string text() const { return digits() + "S"; }

  friend bool operator==(const StageTarget&, const StageTarget&) = default;
};

struct Stage {
  StageInput input;
  StageTarget target;
};

// Digits present at the k-th least significant position: a's first, then b's.
inline std::vector<int> stage_digits(const DigitString& a, const DigitString& b, std::size_t k) {
  std::vector<int> digits;
  if (k < a.size()) digits.push_back(a.digit_from_right(k));
  if (k < b.size()) digits.push_back(b.digit_from_right(k));
  return digits;
}

inline std::size_t stage_count(const DigitString& a, const DigitString& b) {
  return std::max(a.size(), b.size());
}

inline StageInput make_stage_input(const DigitString& a, const DigitString& b, std::size_t k,
                                   std::string_view prev_output) {
  if (k == 0) return StageInput{StageKind::kFirst, {}, stage_digits(a, b, 0)};
  return StageInput{StageKind::kContinuation, std::string(prev_output), stage_digits(a, b, k)};
}

// Exact target for a rendered stage input ("d1d2" or "<prev>C<d>[<d>]").
// A two-digit prefix before C signals a carry.
inline StageTarget exact_stage_target(std::string_view input_text) {
  const auto c_pos = input_text.find('C');
  std::string_view tail = input_text;
  int sum = 0;
  if (c_pos != std::string_view::npos) {
    const std::string_view prev = input_text.substr(0, c_pos);
    if (prev.empty() || prev.size() > 2) {
      throw InvalidDigits("malformed stage input \"" + std::string(input_text) + "\"");
    }
    sum += prev.size() == 2 ? 1 : 0;
    tail = input_text.substr(c_pos + 1);
  }
  if (tail.empty() || tail.size() > 2 || (c_pos == std::string_view::npos && tail.size() != 2)) {
    throw InvalidDigits("malformed stage input \"" + std::string(input_text) + "\"");
  }
  for (char ch : tail) {
    if (ch < '0' || ch > '9') {
      throw InvalidDigits("malformed stage input \"" + std::string(input_text) + "\"");
    }
    sum += ch - '0';
  }
  return StageTarget{sum};
}

inline std::vector<Stage> decompose_stages(const DigitString& a, const DigitString& b) {
  const std::size_t n = stage_count(a, b);
  std::vector<Stage> stages;
  stages.reserve(n);
  int prev_sum = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto digits = stage_digits(a, b, k);
    int sum = (k > 0 && prev_sum >= 10) ? 1 : 0;
    for (int d : digits) sum += d;
    StageInput input = k == 0 ? StageInput{StageKind::kFirst, {}, digits}
                              : StageInput{StageKind::kContinuation, std::to_string(prev_sum), digits};
    stages.push_back(Stage{std::move(input), StageTarget{sum}});
    prev_sum = sum;
  }
  return stages;
}

// All digits of the last output, then the last digit of each earlier output in
// reverse stage order. A leading zero in a multi-digit result is rejected.
inline DigitString collate(const std::vector<std::string>& stage_outputs) {
  if (stage_outputs.empty()) throw EmptyStageList();
  for (std::size_t i = 0; i < stage_outputs.size(); ++i) {
    const std::string& out = stage_outputs[i];
    if (out.empty() || out.size() > 2 ||
        !std::all_of(out.begin(), out.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw InvalidDigits("stage " + std::to_string(i + 1) + " output \"" + out +
                          "\" is not one or two digits");
    }
  }
  std::string answer = stage_outputs.back();
  answer.reserve(answer.size() + stage_outputs.size());
  for (std::size_t i = stage_outputs.size() - 1; i-- > 0;) {
    answer.push_back(stage_outputs[i].back());
  }
  return DigitString(std::move(answer));
}

}  // namespace ccat
