#pragma once

// Architecture hyperparameters, learnable parameters and the prefix-visible
// attention mask.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccat/vocab.hpp"

namespace ccat {

template <typename Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
using RowVec = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

struct ModelConfig {
  int vocab_size = kVocabSize;
  int d_model = 64;
  int n_heads = 2;
  int n_blocks = 2;
  int d_ffn = 256;
  double dropout_rate = 0.2;
  int input_len = static_cast<int>(kInputLen);
  int output_len = static_cast<int>(kTargetLen);

  int seq_len() const { return input_len + output_len; }
  int head_dim() const { return d_model / n_heads; }

  void validate() const {
    if (vocab_size != kVocabSize) throw std::invalid_argument("vocab_size must be 14");
    if (d_model <= 0 || n_heads <= 0 || n_blocks <= 0 || d_ffn <= 0) {
      throw std::invalid_argument("model dimensions must be positive");
    }
    if (d_model % n_heads != 0) throw std::invalid_argument("d_model must be divisible by n_heads");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw std::invalid_argument("dropout_rate must lie in [0,1)");
    }
    if (input_len != static_cast<int>(kInputLen) || output_len != static_cast<int>(kTargetLen)) {
      throw std::invalid_argument("input/output lengths are fixed at 5 and 3");
    }
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename Real>
struct BlockParams {
  RowVec<Real> ln1_gain, ln1_bias;
  Mat<Real> wq, wk, wv, wo;  // d_model x d_model
  RowVec<Real> ln2_gain, ln2_bias;
  Mat<Real> w1;  // d_model x d_ffn
  RowVec<Real> b1;
  Mat<Real> w2;  // d_ffn x d_model
  RowVec<Real> b2;
};

template <typename Real>
struct ModelParams {
  ModelConfig config;
  Mat<Real> embedding;  // vocab x d_model
  std::vector<BlockParams<Real>> blocks;
  RowVec<Real> final_gain, final_bias;
  Mat<Real> output;  // d_model x vocab
};

// A view of one parameter tensor. Row vectors are rank 1.
template <typename Real>
struct TensorView {
  std::string name;
  Real* data;
  Eigen::Index rows;
  Eigen::Index cols;
  int rank;
  bool decay;  // normalization gains and offsets are exempt from weight decay

  Eigen::Index size() const { return rows * cols; }
  Eigen::Map<Mat<Real>> map() const { return Eigen::Map<Mat<Real>>(data, rows, cols); }
};

namespace detail {
template <typename Real, typename M>
TensorView<Real> view_of(std::string name, M& m, int rank, bool decay) {
  return TensorView<Real>{std::move(name), m.data(), m.rows(), m.cols(), rank, decay};
}
}  // namespace detail

// Canonical tensor order; checkpoints and the optimizer rely on it.
template <typename Real>
std::vector<TensorView<Real>> tensor_views(ModelParams<Real>& p) {
  using detail::view_of;
  std::vector<TensorView<Real>> v;
  v.push_back(view_of<Real>("embedding", p.embedding, 2, true));
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    auto& b = p.blocks[i];
    const std::string pre = "blocks." + std::to_string(i) + ".";
    v.push_back(view_of<Real>(pre + "ln1.gain", b.ln1_gain, 1, false));
    v.push_back(view_of<Real>(pre + "ln1.bias", b.ln1_bias, 1, false));
    v.push_back(view_of<Real>(pre + "attn.wq", b.wq, 2, true));
    v.push_back(view_of<Real>(pre + "attn.wk", b.wk, 2, true));
    v.push_back(view_of<Real>(pre + "attn.wv", b.wv, 2, true));
    v.push_back(view_of<Real>(pre + "attn.wo", b.wo, 2, true));
    v.push_back(view_of<Real>(pre + "ln2.gain", b.ln2_gain, 1, false));
    v.push_back(view_of<Real>(pre + "ln2.bias", b.ln2_bias, 1, false));
    v.push_back(view_of<Real>(pre + "ffn.w1", b.w1, 2, true));
    v.push_back(view_of<Real>(pre + "ffn.b1", b.b1, 1, true));
    v.push_back(view_of<Real>(pre + "ffn.w2", b.w2, 2, true));
    v.push_back(view_of<Real>(pre + "ffn.b2", b.b2, 1, true));
  }
  v.push_back(view_of<Real>("final_ln.gain", p.final_gain, 1, false));
  v.push_back(view_of<Real>("final_ln.bias", p.final_bias, 1, false));
  v.push_back(view_of<Real>("output", p.output, 2, true));
  return v;
}

template <typename Real>
std::vector<TensorView<Real>> tensor_views(const ModelParams<Real>& p) {
  return tensor_views(const_cast<ModelParams<Real>&>(p));
}

template <typename Real>
ModelParams<Real> zeros_like(const ModelConfig& c) {
  c.validate();
  ModelParams<Real> p;
  p.config = c;
  const int d = c.d_model;
  p.embedding = Mat<Real>::Zero(c.vocab_size, d);
  p.blocks.resize(static_cast<std::size_t>(c.n_blocks));
  for (auto& b : p.blocks) {
    b.ln1_gain = RowVec<Real>::Zero(d);
    b.ln1_bias = RowVec<Real>::Zero(d);
    b.wq = Mat<Real>::Zero(d, d);
    b.wk = Mat<Real>::Zero(d, d);
    b.wv = Mat<Real>::Zero(d, d);
    b.wo = Mat<Real>::Zero(d, d);
    b.ln2_gain = RowVec<Real>::Zero(d);
    b.ln2_bias = RowVec<Real>::Zero(d);
    b.w1 = Mat<Real>::Zero(d, c.d_ffn);
    b.b1 = RowVec<Real>::Zero(c.d_ffn);
    b.w2 = Mat<Real>::Zero(c.d_ffn, d);
    b.b2 = RowVec<Real>::Zero(d);
  }
  p.final_gain = RowVec<Real>::Zero(d);
  p.final_bias = RowVec<Real>::Zero(d);
  p.output = Mat<Real>::Zero(d, c.vocab_size);
  return p;
}

template <typename Real>
std::size_t parameter_count(const ModelParams<Real>& p) {
  std::size_t n = 0;
  for (const auto& t : tensor_views(p)) n += static_cast<std::size_t>(t.size());
  return n;
}

// Weights ~ N(0, 1/d_model); normalization gains 1; all offsets and biases 0.
template <typename Real>
ModelParams<Real> init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams<Real> p = zeros_like<Real>(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.d_model)));
  for (auto& t : tensor_views(p)) {
    if (t.rank == 2) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = static_cast<Real>(normal(rng));
    }
  }
  for (auto& b : p.blocks) {
    b.ln1_gain.setOnes();
    b.ln2_gain.setOnes();
  }
  p.final_gain.setOnes();
  return p;
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& src) {
  ModelParams<To> dst = zeros_like<To>(src.config);
  auto s = tensor_views(src);
  auto d = tensor_views(dst);
  for (std::size_t i = 0; i < s.size(); ++i) d[i].map() = s[i].map().template cast<To>();
  return dst;
}

template <typename Real>
bool all_finite(const ModelParams<Real>& p) {
  for (const auto& t : tensor_views(p)) {
    if (!t.map().allFinite()) return false;
  }
  return true;
}

// Entry (i, j) is true when query position i may attend to key position j.
// Input positions see the whole input block and nothing else; output
// positions see the input block plus their causal past.
class AttentionMask {
 public:
  AttentionMask(int input_len, int prefix_len)
      : input_len_(input_len), size_(input_len + prefix_len) {
    if (input_len < 1 || prefix_len < 0) throw std::invalid_argument("bad mask dimensions");
    allowed_.resize(static_cast<std::size_t>(size_ * size_));
    for (int i = 0; i < size_; ++i) {
      for (int j = 0; j < size_; ++j) {
        const bool ok = i < input_len ? j < input_len : (j < input_len || j <= i);
        allowed_[static_cast<std::size_t>(i * size_ + j)] = ok ? 1 : 0;
      }
    }
  }

  int size() const noexcept { return size_; }
  int input_len() const noexcept { return input_len_; }
  bool operator()(int i, int j) const { return allowed_[static_cast<std::size_t>(i * size_ + j)] != 0; }

 private:
  int input_len_;
  int size_;
  std::vector<std::uint8_t> allowed_;
};

inline AttentionMask build_mask(int input_len, int prefix_len) {
  if (prefix_len < 1 || prefix_len > static_cast<int>(kTargetLen)) {
    throw std::invalid_argument("prefix_len must lie in [1,3]");
  }
  return AttentionMask(input_len, prefix_len);
}

// Fixed sinusoidal encoding for absolute position `pos`.
template <typename Real>
RowVec<Real> positional_encoding(int pos, int d_model) {
  RowVec<Real> pe(d_model);
  for (int i = 0; i < d_model; i += 2) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / d_model);
    pe(i) = static_cast<Real>(std::sin(pos * freq));
    if (i + 1 < d_model) pe(i + 1) = static_cast<Real>(std::cos(pos * freq));
  }
  return pe;
}

}  // namespace ccat
