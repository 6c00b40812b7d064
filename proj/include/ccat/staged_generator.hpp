#pragma once

// Right-to-left staged addition driven by a stage solver (the trained model or
// an exact stand-in), chaining each stage's output into the next input.

#include <concepts>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ccat/decoding.hpp"
#include "ccat/errors.hpp"
#include "ccat/model.hpp"
#include "ccat/reference_adder.hpp"

namespace ccat {

struct TraceStage {
  std::string input;   // unpadded stage input
  std::string output;  // generated text, S-terminated when well formed

  friend bool operator==(const TraceStage&, const TraceStage&) = default;
};

struct GenerationTrace {
  std::vector<TraceStage> stages;
  DigitString final_answer;
};

// Box format: "k) INPUT: <in> OUTPUTS: <out>" per stage, then the answer.
inline std::string render_trace(const GenerationTrace& trace, bool with_answer = true) {
  std::ostringstream os;
  for (std::size_t k = 0; k < trace.stages.size(); ++k) {
    os << (k + 1) << ") INPUT: " << escape_newlines(trace.stages[k].input)
       << " OUTPUTS: " << escape_newlines(trace.stages[k].output) << '\n';
  }
  if (with_answer) os << "Final answer: " << trace.final_answer.str() << '\n';
  return os.str();
}

// The solver produced something other than one or two digits followed by S.
class MalformedOutput : public Error {
 public:
  MalformedOutput(std::string what, GenerationTrace partial)
      : Error(std::move(what)), trace_(std::move(partial)) {}

  const GenerationTrace& partial_trace() const noexcept { return trace_; }

 private:
  GenerationTrace trace_;
};

template <typename S>
concept StageSolver = requires(S s, std::string_view in) {
  { s.solve(in) } -> std::same_as<StageOutput>;
};

// Exact arithmetic in place of the model.
struct ExactStageSolver {
  StageOutput solve(std::string_view input) const {
    return StageOutput{exact_stage_target(input).digits(), true};
  }
};

// Greedy decoding with a trained model. Inference is deterministic, so
// results may be memoized per stage input; the stage space is finite.
template <typename Real>
class ModelStageSolver {
 public:
  explicit ModelStageSolver(const ModelParams<Real>& params, bool memoize = true)
      : params_(&params), memoize_(memoize) {}

  StageOutput solve(std::string_view input) {
    if (!memoize_) return generate_stage(*params_, input);
    const auto it = memo_.find(std::string(input));
    if (it != memo_.end()) return it->second;
    StageOutput out = generate_stage(*params_, input);
    memo_.emplace(std::string(input), out);
    return out;
  }

  std::size_t memo_size() const noexcept { return memo_.size(); }

 private:
  const ModelParams<Real>* params_;
  bool memoize_;
  std::unordered_map<std::string, StageOutput> memo_;
};

namespace detail {
inline std::string output_text(const StageOutput& out) {
  return out.terminated ? out.text + "S" : out.text;
}
}  // namespace detail

template <StageSolver Solver>
GenerationTrace add_with_model(Solver& solver, const DigitString& a, const DigitString& b) {
  GenerationTrace trace;
  const std::size_t n = stage_count(a, b);
  trace.stages.reserve(n);
  std::vector<std::string> outputs;
  outputs.reserve(n);
  std::string prev;
  for (std::size_t k = 0; k < n; ++k) {
    std::string input = make_stage_input(a, b, k, prev).text();
    const StageOutput out = solver.solve(input);
    trace.stages.push_back(TraceStage{std::move(input), detail::output_text(out)});
    if (!out.well_formed()) {
      std::string what = "stage " + std::to_string(k + 1) + " produced malformed output \"" +
                         escape_newlines(trace.stages.back().output) + "\"";
      throw MalformedOutput(std::move(what), std::move(trace));
    }
    outputs.push_back(out.text);
    prev = out.text;
  }
  try {
    trace.final_answer = collate(outputs);
  } catch (const InvalidDigits& e) {
    std::string what = std::string("collation failed: ") + e.what();
    throw MalformedOutput(std::move(what), std::move(trace));
  }
  return trace;
}

struct VerifyReport {
  std::string predicted;  // empty when generation failed
  DigitString expected;
  bool match = false;
  std::string diagnostic;
  GenerationTrace trace;
};

template <StageSolver Solver>
VerifyReport verify_addition(Solver& solver, const DigitString& a, const DigitString& b) {
  VerifyReport report;
  report.expected = add_digit_strings(a, b);
  try {
    report.trace = add_with_model(solver, a, b);
    report.predicted = report.trace.final_answer.str();
    report.match = report.predicted == report.expected.str();
  } catch (const MalformedOutput& e) {
    report.trace = e.partial_trace();
    report.diagnostic = e.what();
    report.match = false;
  }
  return report;
}

}  // namespace ccat
