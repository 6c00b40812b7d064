#pragma once

// Greedy autoregressive decoding of stage outputs.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccat/model.hpp"
#include "ccat/transformer.hpp"
#include "ccat/vocab.hpp"

namespace ccat {

struct StageOutput {
  std::string text;       // tokens generated before S
  bool terminated = false;  // S appeared within output_len steps

  // One or two digits followed by S.
  bool well_formed() const {
    if (!terminated || text.empty() || text.size() > 2) return false;
    for (char c : text) {
      if (c < '0' || c > '9') return false;
    }
    return true;
  }

  friend bool operator==(const StageOutput&, const StageOutput&) = default;
};

namespace detail {
// Argmax with ties going to the lower id.
template <typename Row>
TokenId argmax(const Row& row) {
  TokenId best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row(j) > row(best)) best = static_cast<TokenId>(j);
  }
  return best;
}
}  // namespace detail

// Decodes each stage input independently. Prefixes start at '\n'; a sequence
// stops at S or after output_len generated tokens.
template <typename Real>
std::vector<StageOutput> greedy_decode(const ModelParams<Real>& params,
                                       std::span<const std::string> inputs) {
  const ModelConfig& c = params.config;
  const std::size_t n = inputs.size();
  std::vector<std::vector<TokenId>> seqs(n);
  for (std::size_t i = 0; i < n; ++i) {
    TokenSeq in = pad_input(encode(inputs[i]));
    seqs[i] = std::move(in.ids);
    seqs[i].push_back(token::kStart);
  }
  std::vector<StageOutput> outputs(n);
  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;

  for (int step = 1; step <= c.output_len && !active.empty(); ++step) {
    SeqBatch batch;
    batch.batch = static_cast<int>(active.size());
    batch.prefix_len = step;
    batch.tokens.reserve(active.size() * static_cast<std::size_t>(c.input_len + step));
    for (std::size_t i : active) batch.tokens.insert(batch.tokens.end(), seqs[i].begin(), seqs[i].end());
    const Mat<Real> logits = forward_batch<Real>(params, batch, nullptr);

    std::vector<std::size_t> still;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t i = active[a];
      const TokenId next = detail::argmax(logits.row(static_cast<Eigen::Index>(a) * step + step - 1));
      if (next == token::kStop) {
        outputs[i].terminated = true;
        continue;
      }
      outputs[i].text.push_back(id_symbol(next));
      seqs[i].push_back(next);
      still.push_back(i);
    }
    active = std::move(still);
  }
  return outputs;
}

template <typename Real>
StageOutput generate_stage(const ModelParams<Real>& params, std::string_view stage_input) {
  const std::string in(stage_input);
  return greedy_decode(params, std::span<const std::string>(&in, 1)).front();
}

}  // namespace ccat
