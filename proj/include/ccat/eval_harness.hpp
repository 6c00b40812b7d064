#pragma once

// Large-scale correctness testing of staged additions across operand lengths.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccat/reference_adder.hpp"
#include "ccat/staged_generator.hpp"

namespace ccat {

using EvalRng = std::mt19937_64;

// Uniform digits with a nonzero leading digit; length 1 may be 0.
inline DigitString random_operand(std::size_t length, EvalRng& rng) {
  if (length < 1) throw std::invalid_argument("operand length must be >= 1");
  std::uniform_int_distribution<int> digit(0, 9);
  std::uniform_int_distribution<int> lead(1, 9);
  std::string s(length, '0');
  s[0] = static_cast<char>('0' + (length == 1 ? digit(rng) : lead(rng)));
  for (std::size_t i = 1; i < length; ++i) s[i] = static_cast<char>('0' + digit(rng));
  return DigitString(std::move(s));
}

struct EvalSpec {
  std::size_t num_cases = 1000;
  std::size_t min_digits = 1;
  std::size_t max_digits = 1000;
  // When non-empty, cases cycle through these lengths instead of sampling.
  std::vector<std::size_t> fixed_lengths;
  std::uint64_t seed = 0;
  // Rows in the rendered table cover this many lengths; 0 picks a width
  // giving at most ten rows.
  std::size_t bucket_width = 0;
  bool keep_records = false;

  void validate() const {
    if (num_cases < 1) throw std::invalid_argument("num_cases must be >= 1");
    if (fixed_lengths.empty()) {
      if (min_digits < 1 || max_digits < min_digits) throw std::invalid_argument("need 1 <= min_digits <= max_digits");
    }
    for (std::size_t len : fixed_lengths) {
      if (len < 1) throw std::invalid_argument("lengths must be >= 1");
    }
  }
};

struct EvalCase {
  std::size_t length = 0;
  std::string a, b, predicted, expected;
  bool match = false;
  std::string diagnostic;
};

struct LengthBucket {
  std::size_t lo = 0, hi = 0;
  std::size_t cases = 0;
  std::size_t matches = 0;

  double accuracy() const { return cases == 0 ? 0.0 : static_cast<double>(matches) / cases; }
};

struct EvalReport {
  std::vector<LengthBucket> buckets;
  std::size_t cases = 0;
  std::size_t matches = 0;
  std::vector<EvalCase> failures;
  std::vector<EvalCase> records;  // every case, when requested
  double wall_seconds = 0;

  double accuracy() const { return cases == 0 ? 0.0 : static_cast<double>(matches) / cases; }
};

template <StageSolver Solver>
EvalReport run_eval(const EvalSpec& spec, Solver& solver) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  EvalRng rng(spec.seed);
  std::uniform_int_distribution<std::size_t> length_dist(spec.min_digits, spec.max_digits);

  std::size_t width = spec.bucket_width;
  std::size_t base = spec.min_digits;
  if (!spec.fixed_lengths.empty()) {
    width = 1;
    base = 0;
  } else if (width == 0) {
    width = (spec.max_digits - spec.min_digits + 10) / 10;
  }
  std::map<std::size_t, LengthBucket> buckets;

  EvalReport report;
  for (std::size_t i = 0; i < spec.num_cases; ++i) {
    const std::size_t len = spec.fixed_lengths.empty() ? length_dist(rng)
                                                      : spec.fixed_lengths[i % spec.fixed_lengths.size()];
    const DigitString a = random_operand(len, rng);
    const DigitString b = random_operand(len, rng);
    const VerifyReport v = verify_addition(solver, a, b);

    const std::size_t key = (len - base) / width;
    LengthBucket& bucket = buckets[key];
    bucket.lo = base + key * width;
    bucket.hi = bucket.lo + width - 1;
    ++bucket.cases;
    ++report.cases;
    if (v.match) {
      ++bucket.matches;
      ++report.matches;
    }
    if (!v.match || spec.keep_records) {
      EvalCase c{len, a.str(), b.str(), v.predicted, v.expected.str(), v.match, v.diagnostic};
      if (!v.match) report.failures.push_back(c);
      if (spec.keep_records) report.records.push_back(std::move(c));
    }
  }
  for (auto& [key, bucket] : buckets) report.buckets.push_back(bucket);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

inline std::string report_render(const EvalReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-17s %8s %8s %9s\n", "digits", "cases", "matches", "accuracy");
  os << line;
  for (const auto& b : report.buckets) {
    const std::string label = b.lo == b.hi ? std::to_string(b.lo) : std::to_string(b.lo) + "-" + std::to_string(b.hi);
    std::snprintf(line, sizeof line, "%-17s %8zu %8zu %9.3f\n", label.c_str(), b.cases, b.matches, b.accuracy());
    os << line;
  }
  std::snprintf(line, sizeof line, "%-17s %8zu %8zu %9.3f\n", "total", report.cases, report.matches,
                report.accuracy());
  os << line;
  std::snprintf(line, sizeof line, "wall time: %.3f s\n", report.wall_seconds);
  os << line;
  for (const auto& f : report.failures) {
    os << "FAILURE (" << f.length << " digits)\n"
       << "  a         = " << f.a << '\n'
       << "  b         = " << f.b << '\n'
       << "  predicted = " << f.predicted << '\n'
       << "  expected  = " << f.expected << '\n';
    if (!f.diagnostic.empty()) os << "  note      = " << f.diagnostic << '\n';
  }
  return os.str();
}

// One case per line: length, a, b, predicted, expected, match (tab separated).
inline void write_records(std::ostream& os, const std::vector<EvalCase>& cases) {
  for (const auto& c : cases) {
    os << c.length << '\t' << c.a << '\t' << c.b << '\t' << c.predicted << '\t' << c.expected << '\t'
       << (c.match ? 1 : 0) << '\n';
  }
}

}  // namespace ccat
