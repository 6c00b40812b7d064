#pragma once

// Subcommands: train, add, eval, stage-eval, oracle-check, instances.
// Exit codes: 0 success or match, 1 semantic failure (mismatch,
// non-convergence, failed check), 2 usage or input error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ccat/checkpoint.hpp"
#include "ccat/eval_harness.hpp"
#include "ccat/instances.hpp"
#include "ccat/optimizer.hpp"
#include "ccat/reference_adder.hpp"
#include "ccat/staged_generator.hpp"

namespace ccat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct OracleCheckResult {
  std::uint64_t exhaustive_pairs = 0;
  std::uint64_t random_pairs = 0;
  std::uint64_t failures = 0;
  std::string first_failure;
};

// Protocol self-test: collating exact stage targets must reproduce school
// addition, and both must agree with native integers where those fit.
inline OracleCheckResult oracle_check(std::uint64_t exhaustive_upto, std::uint64_t random_pairs,
                                      std::size_t max_digits, std::uint64_t seed) {
  OracleCheckResult r;
  auto check = [&](const DigitString& a, const DigitString& b, const std::string* native) {
    const auto stages = decompose_stages(a, b);
    std::vector<std::string> outs;
    outs.reserve(stages.size());
    for (const auto& s : stages) outs.push_back(s.target.digits());
    const DigitString via_stages = collate(outs);
    const DigitString school = add_digit_strings(a, b);
    const bool ok = via_stages == school && stages.size() == stage_count(a, b) &&
                    (native == nullptr || school.str() == *native);
    if (!ok) {
      if (r.failures == 0) {
        r.first_failure = a.str() + " + " + b.str() + ": stages=" + via_stages.str() + " school=" + school.str();
      }
      ++r.failures;
    }
  };
  for (std::uint64_t a = 0; a < exhaustive_upto; ++a) {
    const DigitString da(std::to_string(a));
    for (std::uint64_t b = 0; b < exhaustive_upto; ++b) {
      const std::string native = std::to_string(a + b);
      check(da, DigitString(std::to_string(b)), &native);
      ++r.exhaustive_pairs;
    }
  }
  EvalRng rng(seed);
  std::uniform_int_distribution<std::size_t> len(1, max_digits);
  for (std::uint64_t i = 0; i < random_pairs; ++i) {
    const std::size_t la = len(rng);
    const std::size_t lb = len(rng);
    const DigitString a = random_operand(la, rng);
    const DigitString b = random_operand(lb, rng);
    check(a, b, nullptr);
    ++r.random_pairs;
  }
  return r;
}

namespace detail {

inline std::optional<DigitString> parse_operand(const std::string& flag, const std::string& text,
                                                std::ostream& err) {
  try {
    return DigitString(text);
  } catch (const InvalidDigits& e) {
    err << "error: --" << flag << ": " << e.what() << '\n';
    return std::nullopt;
  }
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Staged carry-chained addition with a small decoder-only transformer", "ccat"};
  app.require_subcommand(1);

  // train
  std::string train_out;
  OptimConfig optim;
  MixConfig mix;
  ModelConfig model;
  bool with_optim_state = false;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  train_cmd->add_option("--out", train_out, "checkpoint path")->required();
  train_cmd->add_option("--seed", optim.seed, "seed for init, sampling and dropout");
  train_cmd->add_option("--steps,--max-steps", optim.max_steps, "maximum optimizer steps");
  train_cmd->add_option("--batch-size", optim.batch_size);
  train_cmd->add_option("--lr", optim.learning_rate);
  train_cmd->add_option("--weight-decay", optim.weight_decay);
  train_cmd->add_option("--second-type-frac", mix.second_type_fraction)->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--eval-every", optim.eval_every);
  train_cmd->add_option("--patience", optim.patience, "consecutive perfect evaluations to stop");
  train_cmd->add_flag("--uniform-stage-space", mix.uniform_stage_space,
                      "sample second-type inputs uniformly, prev_sum 19 included");
  train_cmd->add_flag("--with-optimizer-state", with_optim_state);
  train_cmd->add_flag("--quiet", quiet);

  // add
  std::string ckpt;
  std::string a_text, b_text;
  bool trace = false;
  bool exact = false;
  auto* add_cmd = app.add_subcommand("add", "add two integers stage by stage");
  auto* add_ckpt = add_cmd->add_option("--ckpt", ckpt, "checkpoint path");
  add_cmd->add_flag("--exact", exact, "use exact stage arithmetic instead of a model")->excludes(add_ckpt);
  add_cmd->add_option("--a", a_text)->required();
  add_cmd->add_option("--b", b_text)->required();
  add_cmd->add_flag("--trace", trace, "print every stage");

  // eval
  EvalSpec spec;
  std::string report_path;
  bool no_memo = false;
  auto* eval_cmd = app.add_subcommand("eval", "random additions checked against exact arithmetic");
  auto* eval_ckpt = eval_cmd->add_option("--ckpt", ckpt, "checkpoint path");
  eval_cmd->add_flag("--exact", exact, "use exact stage arithmetic instead of a model")->excludes(eval_ckpt);
  eval_cmd->add_option("--cases", spec.num_cases);
  eval_cmd->add_option("--min-digits", spec.min_digits);
  eval_cmd->add_option("--max-digits", spec.max_digits);
  eval_cmd->add_option("--lengths", spec.fixed_lengths, "fixed operand lengths, cycled");
  eval_cmd->add_option("--seed", spec.seed);
  eval_cmd->add_option("--bucket-width", spec.bucket_width);
  eval_cmd->add_option("--report", report_path, "write one line per case");
  eval_cmd->add_flag("--no-memo", no_memo, "decode every stage even when seen before");

  // stage-eval
  bool include_19 = false;
  auto* stage_cmd = app.add_subcommand("stage-eval", "exhaustive stage-space accuracy");
  stage_cmd->add_option("--ckpt", ckpt)->required();
  stage_cmd->add_flag("--include-19", include_19, "also test inputs with previous sum 19");

  // oracle-check
  std::uint64_t exhaustive_upto = 1000;
  std::uint64_t random_pairs = 10000;
  std::size_t max_digits = 2000;
  std::uint64_t oracle_seed = 0;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "model-free protocol self-test");
  oracle_cmd->add_option("--exhaustive-upto", exhaustive_upto);
  oracle_cmd->add_option("--random-pairs", random_pairs);
  oracle_cmd->add_option("--max-digits", max_digits)->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--seed", oracle_seed);

  // instances
  std::size_t count = 16;
  auto* inst_cmd = app.add_subcommand("instances", "dump sampled training instances");
  inst_cmd->add_option("--count", count)->check(CLI::PositiveNumber);
  inst_cmd->add_option("--seed", mix.rng_seed);
  inst_cmd->add_option("--second-type-frac", mix.second_type_fraction)->check(CLI::Range(0.0, 1.0));
  inst_cmd->add_flag("--uniform-stage-space", mix.uniform_stage_space);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  auto load = [&]() -> std::optional<Checkpoint> {
    try {
      return load_checkpoint(ckpt);
    } catch (const CheckpointError& e) {
      err << "error: " << e.what() << '\n';
      return std::nullopt;
    }
  };

  try {
    if (*train_cmd) {
      mix.rng_seed = optim.seed;
      try {
        optim.validate();
      } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
      }
      std::ostream* log = quiet ? nullptr : &out;
      const auto t0 = std::chrono::steady_clock::now();
      TrainResult<float> r = train<float>(model, optim, mix, log);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      TrainingMetadata meta{optim.seed, r.steps, r.stage_accuracy};
      save_checkpoint(train_out, r.params, meta, with_optim_state ? &r.state : nullptr);
      if (!r.converged) {
        err << "NonConvergence: stage accuracy " << r.stage_accuracy << " after " << r.steps
            << " steps; checkpoint written to " << train_out << '\n';
        return kExitFailure;
      }
      out << "converged after " << r.steps << " steps in " << secs << " s; checkpoint written to "
          << train_out << '\n';
      return kExitOk;
    }

    if (*add_cmd) {
      const auto a = detail::parse_operand("a", a_text, err);
      const auto b = detail::parse_operand("b", b_text, err);
      if (!a || !b) return kExitUsage;
      VerifyReport v;
      if (exact) {
        ExactStageSolver solver;
        v = verify_addition(solver, *a, *b);
      } else {
        if (ckpt.empty()) {
          err << "error: add needs --ckpt or --exact\n";
          return kExitUsage;
        }
        const auto ck = load();
        if (!ck) return kExitUsage;
        ModelStageSolver<float> solver(ck->params);
        v = verify_addition(solver, *a, *b);
      }
      if (trace) {
        out << "Autoregressive generation to compute: " << a->str() << '+' << b->str() << '\n';
        out << render_trace(v.trace, false);
        out << "Final answer: " << (v.predicted.empty() ? "<none>" : v.predicted) << '\n';
      } else {
        out << v.predicted << '\n';
      }
      if (!v.match) {
        err << "mismatch: expected " << v.expected.str();
        if (!v.diagnostic.empty()) err << " (" << v.diagnostic << ')';
        err << '\n';
        return kExitFailure;
      }
      return kExitOk;
    }

    if (*eval_cmd) {
      spec.keep_records = !report_path.empty();
      try {
        spec.validate();
      } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
      }
      EvalReport report;
      if (exact) {
        ExactStageSolver solver;
        report = run_eval(spec, solver);
      } else {
        if (ckpt.empty()) {
          err << "error: eval needs --ckpt or --exact\n";
          return kExitUsage;
        }
        const auto ck = load();
        if (!ck) return kExitUsage;
        ModelStageSolver<float> solver(ck->params, !no_memo);
        report = run_eval(spec, solver);
      }
      out << report_render(report);
      if (!report_path.empty()) {
        std::ofstream rf(report_path);
        if (!rf) {
          err << "error: cannot write report to '" << report_path << "'\n";
          return kExitUsage;
        }
        write_records(rf, report.records);
      }
      return report.matches == report.cases ? kExitOk : kExitFailure;
    }

    if (*stage_cmd) {
      const auto ck = load();
      if (!ck) return kExitUsage;
      const auto space = enumerate_stage_space(include_19 ? 19 : 18);
      const StageEvalResult ev = evaluate_stage_accuracy(ck->params, std::span<const StageCase>(space));
      out << "stage_acc=" << ev.accuracy() << " correct=" << ev.correct << " total=" << ev.total << '\n';
      if (include_19) {
        std::size_t total19 = 0, bad19 = 0;
        for (const auto& sc : space) total19 += sc.input.starts_with("19C") ? 1 : 0;
        for (const auto& f : ev.failures) bad19 += f.input.starts_with("19C") ? 1 : 0;
        out << "prev_sum_19: correct=" << (total19 - bad19) << " total=" << total19 << '\n';
      }
      for (const auto& f : ev.failures) {
        out << "FAIL input=" << f.input << " expected=" << f.expected << " got=" << escape_newlines(f.got) << '\n';
      }
      return ev.failures.empty() ? kExitOk : kExitFailure;
    }

    if (*oracle_cmd) {
      const auto t0 = std::chrono::steady_clock::now();
      const OracleCheckResult r = oracle_check(exhaustive_upto, random_pairs, max_digits, oracle_seed);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out << "exhaustive_pairs=" << r.exhaustive_pairs << " random_pairs=" << r.random_pairs
          << " failures=" << r.failures << " seconds=" << secs << '\n';
      if (r.failures != 0) out << "first failure: " << r.first_failure << '\n';
      return r.failures == 0 ? kExitOk : kExitFailure;
    }

    if (*inst_cmd) {
      InstanceRng rng(mix.rng_seed);
      dump_instances(out, sample_batch(mix, count, rng));
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace ccat::cli
