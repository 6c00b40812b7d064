#pragma once

// Adam with decoupled weight decay, the training loop, and exhaustive
// stage-space evaluation.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccat/decoding.hpp"
#include "ccat/instances.hpp"
#include "ccat/model.hpp"
#include "ccat/transformer.hpp"

namespace ccat {

struct OptimConfig {
  double learning_rate = 5e-4;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 512;
  std::uint64_t max_steps = 200000;
  std::uint64_t eval_every = 500;
  // Consecutive perfect evaluations required to stop.
  int patience = 3;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0) || weight_decay < 0 || !(adam_beta1 > 0 && adam_beta1 < 1) ||
        !(adam_beta2 > 0 && adam_beta2 < 1) || !(adam_eps > 0)) {
      throw std::invalid_argument("invalid optimizer hyperparameters");
    }
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  }
};

template <typename Real>
struct OptimState {
  ModelParams<Real> first_moment;
  ModelParams<Real> second_moment;
  std::uint64_t step = 0;

  static OptimState zeros(const ModelConfig& c) {
    return OptimState{zeros_like<Real>(c), zeros_like<Real>(c), 0};
  }
};

// One Adam update from precomputed gradients. Decay shrinks the parameter
// before the Adam delta and skips normalization gains and offsets.
template <typename Real>
void adam_update(ModelParams<Real>& params, OptimState<Real>& state, const ModelParams<Real>& grads,
                 const OptimConfig& cfg) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const Real b1 = static_cast<Real>(cfg.adam_beta1);
  const Real b2 = static_cast<Real>(cfg.adam_beta2);
  const Real lr = static_cast<Real>(cfg.learning_rate);
  const Real eps = static_cast<Real>(cfg.adam_eps);
  const Real c1 = static_cast<Real>(1.0 - std::pow(cfg.adam_beta1, t));
  const Real c2 = static_cast<Real>(1.0 - std::pow(cfg.adam_beta2, t));
  const Real shrink = static_cast<Real>(1.0 - cfg.learning_rate * cfg.weight_decay);

  auto p = tensor_views(params);
  auto m = tensor_views(state.first_moment);
  auto v = tensor_views(state.second_moment);
  auto g = tensor_views(grads);
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pm = p[i].map();
    auto mm = m[i].map();
    auto vm = v[i].map();
    const auto gm = g[i].map();
    mm = b1 * mm + (Real(1) - b1) * gm;
    vm = b2 * vm + (Real(1) - b2) * gm.cwiseProduct(gm);
    if (p[i].decay && cfg.weight_decay != 0.0) pm *= shrink;
    pm.array() -= lr * (mm.array() / c1) / ((vm.array() / c2).sqrt() + eps);
  }
}

template <typename Real>
Real train_step(ModelParams<Real>& params, OptimState<Real>& state,
                std::span<const TrainingInstance> batch, Dropout* dropout, const OptimConfig& cfg) {
  GradResult<Real> gr = gradients(params, batch, dropout);
  adam_update(params, state, gr.grads, cfg);
  return gr.loss;
}

struct StageFailure {
  std::string input;
  std::string expected;
  std::string got;
};

struct StageEvalResult {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::vector<StageFailure> failures;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

// Greedy-decodes every case (dropout off) and compares the S-terminated output.
template <typename Real>
StageEvalResult evaluate_stage_accuracy(const ModelParams<Real>& params,
                                        std::span<const StageCase> space) {
  std::vector<std::string> inputs;
  inputs.reserve(space.size());
  for (const auto& sc : space) inputs.push_back(sc.input);
  const auto outputs = greedy_decode(params, std::span<const std::string>(inputs));
  StageEvalResult result;
  result.total = space.size();
  for (std::size_t i = 0; i < space.size(); ++i) {
    const std::string got = outputs[i].terminated ? outputs[i].text + "S" : outputs[i].text;
    if (got == space[i].target) {
      ++result.correct;
    } else {
      result.failures.push_back(StageFailure{space[i].input, space[i].target, got});
    }
  }
  return result;
}

struct TrainLogEntry {
  std::uint64_t step = 0;
  double loss = 0;
  double stage_accuracy = 0;
  std::size_t failures = 0;
};

inline std::string format_log_entry(const TrainLogEntry& e) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "step=%llu loss=%.6f stage_acc=%.6f fails=%zu",
                static_cast<unsigned long long>(e.step), e.loss, e.stage_accuracy, e.failures);
  return buf;
}

template <typename Real>
struct TrainResult {
  ModelParams<Real> params;
  OptimState<Real> state;
  std::vector<TrainLogEntry> log;
  std::uint64_t steps = 0;
  double stage_accuracy = 0;
  bool converged = false;
};

// Seeds derived from OptimConfig::seed: init uses it directly, dropout a
// fixed offset of it. Instance sampling uses MixConfig::rng_seed.
inline constexpr std::uint64_t kDropoutSeedOffset = 0x9e3779b97f4a7c15ULL;

template <typename Real>
TrainResult<Real> train(const ModelConfig& model_cfg, const OptimConfig& cfg, const MixConfig& mix,
                        std::ostream* log = nullptr) {
  model_cfg.validate();
  cfg.validate();
  mix.validate();

  TrainResult<Real> r;
  r.params = init_params<Real>(model_cfg, cfg.seed);
  r.state = OptimState<Real>::zeros(model_cfg);
  InstanceRng sample_rng(mix.rng_seed);
  std::mt19937_64 dropout_rng(cfg.seed + kDropoutSeedOffset);
  Dropout dropout(model_cfg.dropout_rate, dropout_rng);
  const std::vector<StageCase> space = enumerate_stage_space(18);

  auto evaluate = [&](std::uint64_t step, double loss) {
    const StageEvalResult ev = evaluate_stage_accuracy(r.params, std::span<const StageCase>(space));
    TrainLogEntry e{step, loss, ev.accuracy(), ev.failures.size()};
    r.log.push_back(e);
    r.stage_accuracy = e.stage_accuracy;
    if (log != nullptr) *log << format_log_entry(e) << std::endl;
    return ev.failures.empty();
  };

  int perfect_streak = 0;
  double loss_sum = 0;
  std::uint64_t loss_count = 0;
  bool evaluated_last = false;
  for (std::uint64_t step = 1; step <= cfg.max_steps; ++step) {
    const auto batch = sample_batch(mix, cfg.batch_size, sample_rng);
    loss_sum += static_cast<double>(
        train_step(r.params, r.state, std::span<const TrainingInstance>(batch), &dropout, cfg));
    ++loss_count;
    r.steps = step;
    evaluated_last = false;
    if (step % cfg.eval_every == 0) {
      const bool perfect = evaluate(step, loss_sum / static_cast<double>(loss_count));
      evaluated_last = true;
      loss_sum = 0;
      loss_count = 0;
      perfect_streak = perfect ? perfect_streak + 1 : 0;
      if (perfect_streak >= cfg.patience) {
        r.converged = true;
        return r;
      }
    }
  }
  if (!evaluated_last) {
    evaluate(r.steps, loss_count == 0 ? std::nan("") : loss_sum / static_cast<double>(loss_count));
  }
  return r;
}

}  // namespace ccat
