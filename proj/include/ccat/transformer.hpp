#pragma once

// Forward pass over the concatenated input/output sequence, cross-entropy
// loss, and exact reverse-mode gradients.
//
// Pipeline per sequence of input_len + prefix_len tokens:
//   x = embed(tok) * sqrt(d_model) + pe(pos)
//   per block: x += attn(ln1(x)); x += ffn(ln2(x))
//   logits = ln_final(x)[output rows] * W_out
// Dropout (when enabled) acts on attention probabilities and on the
// rectified FFN hidden activations.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "ccat/errors.hpp"
#include "ccat/instances.hpp"
#include "ccat/model.hpp"
#include "ccat/vocab.hpp"

namespace ccat {

template <typename Real>
using ColVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

inline constexpr double kLayerNormEps = 1e-5;

// Equal-shape sequences: `batch` rows of input_len + prefix_len token ids.
struct SeqBatch {
  std::vector<TokenId> tokens;
  int batch = 0;
  int prefix_len = 0;
};

// Draws inverted-dropout keep masks: entries are 0 or 1/(1-rate).
class Dropout {
 public:
  Dropout(double rate, std::mt19937_64& rng) : rate_(rate), rng_(&rng) {
    threshold_ = static_cast<std::uint64_t>(rate * 4294967296.0);
  }

  double rate() const noexcept { return rate_; }

  template <typename Real>
  void fill(Mat<Real>& keep) {
    const Real scale = static_cast<Real>(1.0 / (1.0 - rate_));
    Real* p = keep.data();
    const Eigen::Index n = keep.size();
    Eigen::Index i = 0;
    while (i < n) {
      const std::uint64_t bits = (*rng_)();
      for (int half = 0; half < 2 && i < n; ++half, ++i) {
        const std::uint64_t u = (bits >> (32 * half)) & 0xffffffffULL;
        p[i] = u < threshold_ ? Real(0) : scale;
      }
    }
  }

 private:
  double rate_;
  std::mt19937_64* rng_;
  std::uint64_t threshold_;
};

template <typename Real>
struct BlockCache {
  Mat<Real> x_in, xhat1, h1, q, k, v, probs, attn_keep, o;
  ColVec<Real> rstd1, rstd2;
  Mat<Real> x_mid, xhat2, h2, ffn_pre, ffn_act, ffn_keep;
};

template <typename Real>
struct ForwardCache {
  int batch = 0;
  int seq = 0;
  int prefix_len = 0;
  bool dropout = false;
  std::vector<TokenId> tokens;
  std::vector<BlockCache<Real>> blocks;
  Mat<Real> x_final, xhat_final, h_out;
  ColVec<Real> rstd_final;
};

namespace detail {

template <typename Real>
void layer_norm(const Mat<Real>& x, const RowVec<Real>& gain, const RowVec<Real>& bias,
                Mat<Real>& xhat, ColVec<Real>& rstd, Mat<Real>& y) {
  const Eigen::Index n = x.cols();
  const ColVec<Real> mean = x.rowwise().mean();
  xhat = x.colwise() - mean;
  const ColVec<Real> var = xhat.array().square().rowwise().sum() / static_cast<Real>(n);
  rstd = (var.array() + static_cast<Real>(kLayerNormEps)).rsqrt();
  xhat = xhat.array().colwise() * rstd.array();
  y = (xhat.array().rowwise() * gain.array()).rowwise() + bias.array();
}

template <typename Real>
Mat<Real> layer_norm_backward(const Mat<Real>& dy, const Mat<Real>& xhat, const ColVec<Real>& rstd,
                              const RowVec<Real>& gain, RowVec<Real>& dgain, RowVec<Real>& dbias) {
  const Real n = static_cast<Real>(dy.cols());
  dgain += (dy.array() * xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  const Mat<Real> dxhat = dy.array().rowwise() * gain.array();
  const ColVec<Real> mean_d = dxhat.rowwise().sum() / n;
  const ColVec<Real> mean_dx = (dxhat.array() * xhat.array()).rowwise().sum() / n;
  Mat<Real> dx = dxhat.colwise() - mean_d;
  dx -= (xhat.array().colwise() * mean_dx.array()).matrix();
  dx = dx.array().colwise() * rstd.array();
  return dx;
}

template <typename Real>
void check_batch(const ModelConfig& c, const SeqBatch& batch) {
  if (batch.batch < 1 || batch.prefix_len < 1 || batch.prefix_len > c.output_len) {
    throw ShapeMismatch("batch must hold >= 1 sequence with prefix length in [1,3]");
  }
  const auto seq = static_cast<std::size_t>(c.input_len + batch.prefix_len);
  if (batch.tokens.size() != seq * static_cast<std::size_t>(batch.batch)) {
    throw ShapeMismatch("token buffer does not match batch x sequence length");
  }
  for (TokenId t : batch.tokens) {
    if (t < 0 || t >= c.vocab_size) throw OutOfRangeId(t);
  }
}

}  // namespace detail

// Logits for every output position, rows ordered (sequence, position).
// `dropout` null means inference mode. `cache` receives what backward needs.
template <typename Real>
Mat<Real> forward_batch(const ModelParams<Real>& params, const SeqBatch& batch, Dropout* dropout,
                        ForwardCache<Real>* cache = nullptr) {
  const ModelConfig& c = params.config;
  detail::check_batch<Real>(c, batch);
  const int B = batch.batch;
  const int T = c.input_len + batch.prefix_len;
  const int d = c.d_model;
  const int H = c.n_heads;
  const int hd = c.head_dim();
  const Eigen::Index rows = static_cast<Eigen::Index>(B) * T;
  const bool drop = dropout != nullptr && dropout->rate() > 0.0;
  const AttentionMask mask(c.input_len, batch.prefix_len);
  const Real scale = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(hd)));
  const Real emb_scale = static_cast<Real>(std::sqrt(static_cast<double>(d)));

  ForwardCache<Real> local;
  ForwardCache<Real>& fc = cache != nullptr ? *cache : local;
  fc.batch = B;
  fc.seq = T;
  fc.prefix_len = batch.prefix_len;
  fc.dropout = drop;
  fc.tokens = batch.tokens;
  fc.blocks.resize(params.blocks.size());

  Mat<Real> pe(T, d);
  for (int t = 0; t < T; ++t) pe.row(t) = positional_encoding<Real>(t, d);

  Mat<Real> x(rows, d);
  for (Eigen::Index r = 0; r < rows; ++r) {
    x.row(r) = params.embedding.row(batch.tokens[static_cast<std::size_t>(r)]) * emb_scale +
               pe.row(static_cast<Eigen::Index>(r % T));
  }

  Mat<Real> s(T, T);
  for (std::size_t l = 0; l < params.blocks.size(); ++l) {
    const BlockParams<Real>& bp = params.blocks[l];
    BlockCache<Real>& bc = fc.blocks[l];
    bc.x_in = x;
    detail::layer_norm(x, bp.ln1_gain, bp.ln1_bias, bc.xhat1, bc.rstd1, bc.h1);
    bc.q.noalias() = bc.h1 * bp.wq;
    bc.k.noalias() = bc.h1 * bp.wk;
    bc.v.noalias() = bc.h1 * bp.wv;
    bc.probs.resize(static_cast<Eigen::Index>(B) * H * T, T);
    if (drop) {
      bc.attn_keep.resize(bc.probs.rows(), T);
      dropout->fill(bc.attn_keep);
    }
    bc.o.resize(rows, d);
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const auto qb = bc.q.block(b * T, h * hd, T, hd);
        const auto kb = bc.k.block(b * T, h * hd, T, hd);
        const auto vb = bc.v.block(b * T, h * hd, T, hd);
        s.noalias() = qb * kb.transpose();
        auto pb = bc.probs.block((b * H + h) * T, 0, T, T);
        for (int i = 0; i < T; ++i) {
          Real mx = -std::numeric_limits<Real>::infinity();
          for (int j = 0; j < T; ++j) {
            if (mask(i, j)) mx = std::max(mx, s(i, j) * scale);
          }
          Real sum = 0;
          for (int j = 0; j < T; ++j) {
            const Real e = mask(i, j) ? std::exp(s(i, j) * scale - mx) : Real(0);
            pb(i, j) = e;
            sum += e;
          }
          pb.row(i) /= sum;
        }
        if (drop) {
          const Mat<Real> pd = pb.cwiseProduct(bc.attn_keep.block((b * H + h) * T, 0, T, T));
          bc.o.block(b * T, h * hd, T, hd).noalias() = pd * vb;
        } else {
          bc.o.block(b * T, h * hd, T, hd).noalias() = pb * vb;
        }
      }
    }
    x.noalias() += bc.o * bp.wo;

    bc.x_mid = x;
    detail::layer_norm(x, bp.ln2_gain, bp.ln2_bias, bc.xhat2, bc.rstd2, bc.h2);
    bc.ffn_pre.noalias() = bc.h2 * bp.w1;
    bc.ffn_pre.rowwise() += bp.b1;
    bc.ffn_act = bc.ffn_pre.cwiseMax(Real(0));
    if (drop) {
      bc.ffn_keep.resize(rows, c.d_ffn);
      dropout->fill(bc.ffn_keep);
      bc.ffn_act = bc.ffn_act.cwiseProduct(bc.ffn_keep);
    }
    x.noalias() += bc.ffn_act * bp.w2;
    x.rowwise() += bp.b2;
  }

  fc.x_final = x;
  Mat<Real> hf;
  detail::layer_norm(x, params.final_gain, params.final_bias, fc.xhat_final, fc.rstd_final, hf);
  const int P = batch.prefix_len;
  fc.h_out.resize(static_cast<Eigen::Index>(B) * P, d);
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < P; ++j) fc.h_out.row(b * P + j) = hf.row(b * T + c.input_len + j);
  }
  Mat<Real> logits = fc.h_out * params.output;
  return logits;
}

// Logits [prefix_len x vocab] for one input/prefix pair.
template <typename Real, typename Rng = std::mt19937_64>
Mat<Real> forward(const ModelParams<Real>& params, const TokenSeq& input, const TokenSeq& prefix,
                  bool train_mode = false, Rng* rng = nullptr) {
  if (prefix.ids.empty() || prefix.ids.front() != token::kStart) throw BadPrefix();
  if (input.ids.size() != static_cast<std::size_t>(params.config.input_len)) {
    throw ShapeMismatch("input must be padded to length 5");
  }
  SeqBatch batch;
  batch.batch = 1;
  batch.prefix_len = static_cast<int>(prefix.ids.size());
  batch.tokens = input.ids;
  batch.tokens.insert(batch.tokens.end(), prefix.ids.begin(), prefix.ids.end());
  if (train_mode) {
    if (rng == nullptr) throw std::invalid_argument("train mode needs a random generator");
    Dropout dropout(params.config.dropout_rate, *rng);
    return forward_batch(params, batch, &dropout);
  }
  return forward_batch<Real>(params, batch, nullptr);
}

// Mean token-level cross-entropy; one target per logits row.
template <typename Real>
Real loss(const Mat<Real>& logits, std::span<const TokenId> targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw ShapeMismatch("logits rows must equal target count");
  }
  Real total = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Real mx = logits.row(r).maxCoeff();
    const Real lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    total += lse - logits(r, targets[static_cast<std::size_t>(r)]);
  }
  return total / static_cast<Real>(logits.rows());
}

// Gradient of loss() with respect to logits.
template <typename Real>
Mat<Real> loss_gradient(const Mat<Real>& logits, std::span<const TokenId> targets) {
  Mat<Real> g(logits.rows(), logits.cols());
  const Real inv_n = Real(1) / static_cast<Real>(logits.rows());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Real mx = logits.row(r).maxCoeff();
    const auto e = (logits.row(r).array() - mx).exp();
    g.row(r) = (e / e.sum()).matrix() * inv_n;
    g(r, targets[static_cast<std::size_t>(r)]) -= inv_n;
  }
  return g;
}

// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(logits).
template <typename Real>
void backward(const ModelParams<Real>& params, const ForwardCache<Real>& fc, const Mat<Real>& dlogits,
              ModelParams<Real>& grads) {
  const ModelConfig& c = params.config;
  const int B = fc.batch;
  const int T = fc.seq;
  const int P = fc.prefix_len;
  const int d = c.d_model;
  const int H = c.n_heads;
  const int hd = c.head_dim();
  const Eigen::Index rows = static_cast<Eigen::Index>(B) * T;
  const Real scale = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(hd)));
  const Real emb_scale = static_cast<Real>(std::sqrt(static_cast<double>(d)));

  grads.output.noalias() += fc.h_out.transpose() * dlogits;
  const Mat<Real> dh_out = dlogits * params.output.transpose();
  Mat<Real> dhf = Mat<Real>::Zero(rows, d);
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < P; ++j) dhf.row(b * T + c.input_len + j) = dh_out.row(b * P + j);
  }
  Mat<Real> dx = detail::layer_norm_backward(dhf, fc.xhat_final, fc.rstd_final, params.final_gain,
                                             grads.final_gain, grads.final_bias);

  Mat<Real> dp(T, T);
  Mat<Real> ds(T, T);
  for (std::size_t li = params.blocks.size(); li-- > 0;) {
    const BlockParams<Real>& bp = params.blocks[li];
    const BlockCache<Real>& bc = fc.blocks[li];
    BlockParams<Real>& bg = grads.blocks[li];

    // FFN sublayer.
    bg.w2.noalias() += bc.ffn_act.transpose() * dx;
    bg.b2 += dx.colwise().sum();
    Mat<Real> dact = dx * bp.w2.transpose();
    if (fc.dropout) dact = dact.cwiseProduct(bc.ffn_keep);
    dact = (bc.ffn_pre.array() > Real(0)).select(dact, Real(0));
    bg.w1.noalias() += bc.h2.transpose() * dact;
    bg.b1 += dact.colwise().sum();
    const Mat<Real> dh2 = dact * bp.w1.transpose();
    dx += detail::layer_norm_backward(dh2, bc.xhat2, bc.rstd2, bp.ln2_gain, bg.ln2_gain, bg.ln2_bias);

    // Attention sublayer.
    bg.wo.noalias() += bc.o.transpose() * dx;
    const Mat<Real> d_o = dx * bp.wo.transpose();
    Mat<Real> dq(rows, d), dk(rows, d), dv(rows, d);
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const auto qb = bc.q.block(b * T, h * hd, T, hd);
        const auto kb = bc.k.block(b * T, h * hd, T, hd);
        const auto vb = bc.v.block(b * T, h * hd, T, hd);
        const auto pb = bc.probs.block((b * H + h) * T, 0, T, T);
        const auto dob = d_o.block(b * T, h * hd, T, hd);
        dp.noalias() = dob * vb.transpose();
        if (fc.dropout) {
          const auto keep = bc.attn_keep.block((b * H + h) * T, 0, T, T);
          const Mat<Real> pd = pb.cwiseProduct(keep);
          dv.block(b * T, h * hd, T, hd).noalias() = pd.transpose() * dob;
          dp = dp.cwiseProduct(keep);
        } else {
          dv.block(b * T, h * hd, T, hd).noalias() = pb.transpose() * dob;
        }
        const ColVec<Real> rowdot = (dp.array() * pb.array()).rowwise().sum();
        ds = (pb.array() * (dp.array().colwise() - rowdot.array())) * scale;
        dq.block(b * T, h * hd, T, hd).noalias() = ds * kb;
        dk.block(b * T, h * hd, T, hd).noalias() = ds.transpose() * qb;
      }
    }
    bg.wq.noalias() += bc.h1.transpose() * dq;
    bg.wk.noalias() += bc.h1.transpose() * dk;
    bg.wv.noalias() += bc.h1.transpose() * dv;
    Mat<Real> dh1 = dq * bp.wq.transpose();
    dh1.noalias() += dk * bp.wk.transpose();
    dh1.noalias() += dv * bp.wv.transpose();
    dx += detail::layer_norm_backward(dh1, bc.xhat1, bc.rstd1, bp.ln1_gain, bg.ln1_gain, bg.ln1_bias);
  }

  for (Eigen::Index r = 0; r < rows; ++r) {
    grads.embedding.row(fc.tokens[static_cast<std::size_t>(r)]) += dx.row(r) * emb_scale;
  }
}

// Teacher forcing: each instance becomes input + ['\n', t1, t2] predicting [t1, t2, t3].
inline SeqBatch teacher_forced_batch(std::span<const TrainingInstance> instances,
                                     std::vector<TokenId>& targets) {
  SeqBatch batch;
  batch.batch = static_cast<int>(instances.size());
  batch.prefix_len = static_cast<int>(kTargetLen);
  batch.tokens.reserve(instances.size() * (kInputLen + kTargetLen));
  targets.clear();
  targets.reserve(instances.size() * kTargetLen);
  for (const auto& inst : instances) {
    if (inst.input.size() != kInputLen || inst.target.size() != kTargetLen) {
      throw ShapeMismatch("instances must be padded to lengths 5 and 3");
    }
    batch.tokens.insert(batch.tokens.end(), inst.input.ids.begin(), inst.input.ids.end());
    batch.tokens.push_back(token::kStart);
    batch.tokens.insert(batch.tokens.end(), inst.target.ids.begin(), inst.target.ids.end() - 1);
    targets.insert(targets.end(), inst.target.ids.begin(), inst.target.ids.end());
  }
  return batch;
}

template <typename Real>
struct GradResult {
  Real loss = 0;
  ModelParams<Real> grads;
};

// Exact gradients of the mean teacher-forced loss over `instances`.
// Passing a Dropout enables train mode; its masks are shared by forward and backward.
template <typename Real>
GradResult<Real> gradients(const ModelParams<Real>& params, std::span<const TrainingInstance> instances,
                           Dropout* dropout = nullptr) {
  if (instances.empty()) throw ShapeMismatch("empty batch");
  std::vector<TokenId> targets;
  const SeqBatch batch = teacher_forced_batch(instances, targets);
  ForwardCache<Real> cache;
  const Mat<Real> logits = forward_batch(params, batch, dropout, &cache);
  GradResult<Real> result;
  result.loss = loss<Real>(logits, targets);
  if (!std::isfinite(static_cast<double>(result.loss))) throw NonFiniteLoss();
  result.grads = zeros_like<Real>(params.config);
  backward(params, cache, loss_gradient<Real>(logits, targets), result.grads);
  return result;
}

// Teacher-forced mean loss with dropout off.
template <typename Real>
Real batch_loss(const ModelParams<Real>& params, std::span<const TrainingInstance> instances) {
  std::vector<TokenId> targets;
  const SeqBatch batch = teacher_forced_batch(instances, targets);
  return loss<Real>(forward_batch<Real>(params, batch, nullptr), targets);
}

}  // namespace ccat
