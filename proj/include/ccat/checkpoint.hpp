#pragma once

// Binary checkpoint, all integers and floats little-endian:
//
//   "CCAT"  u32 version
//   u32 vocab_size, d_model, n_heads, n_blocks, d_ffn, input_len, output_len,
//       dropout (parts per million)
//   14 x (u32 length, bytes)          vocabulary in id order
//   u64 seed, u64 steps, f64 stage_accuracy
//   per tensor in canonical order:
//       u32 name length, name bytes, u32 rank, u32 dims[rank], f32 data (row-major)
//   u32 optimizer-state flag (0 or 1)
//   if 1: first-moment tensors, then second-moment tensors, same framing;
//         the optimizer step count equals `steps`

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ccat/errors.hpp"
#include "ccat/model.hpp"
#include "ccat/optimizer.hpp"
#include "ccat/vocab.hpp"

namespace ccat {

inline constexpr char kCheckpointMagic[4] = {'C', 'C', 'A', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  double stage_accuracy = 0.0;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct Checkpoint {
  ModelParams<float> params;
  TrainingMetadata metadata;
  std::optional<OptimState<float>> optim;
};

namespace detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}

  void bytes(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

 private:
  template <typename U>
  void put(U v) {
    char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    bytes(buf, sizeof(U));
  }

  std::ostream& os_;
};

class LeReader {
 public:
  explicit LeReader(std::istream& is) : is_(is) {}

  void bytes(void* p, std::size_t n, const char* what) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) {
      throw CheckpointError(std::string("truncated checkpoint while reading ") + what);
    }
  }
  std::uint32_t u32(const char* what) { return get<std::uint32_t>(what); }
  std::uint64_t u64(const char* what) { return get<std::uint64_t>(what); }
  float f32(const char* what) { return std::bit_cast<float>(get<std::uint32_t>(what)); }
  double f64(const char* what) { return std::bit_cast<double>(get<std::uint64_t>(what)); }
  std::string str(const char* what, std::uint32_t limit) {
    const std::uint32_t n = u32(what);
    if (n > limit) throw CheckpointError(std::string("implausible length for ") + what);
    std::string s(n, '\0');
    bytes(s.data(), n, what);
    return s;
  }

 private:
  template <typename U>
  U get(const char* what) {
    unsigned char buf[sizeof(U)];
    bytes(buf, sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
  }

  std::istream& is_;
};

inline void write_tensors(LeWriter& w, const ModelParams<float>& p) {
  for (const auto& t : tensor_views(p)) {
    if (!t.map().allFinite()) throw CheckpointError("refusing to serialize non-finite values in " + t.name);
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.rank));
    if (t.rank == 2) w.u32(static_cast<std::uint32_t>(t.rows));
    w.u32(static_cast<std::uint32_t>(t.cols));
    for (Eigen::Index i = 0; i < t.size(); ++i) w.f32(t.data[i]);
  }
}

inline void read_tensors(LeReader& r, ModelParams<float>& p) {
  for (auto& t : tensor_views(p)) {
    const std::string name = r.str("tensor name", 256);
    if (name != t.name) throw CheckpointError("expected tensor '" + t.name + "', found '" + name + "'");
    const std::uint32_t rank = r.u32("tensor rank");
    if (rank != static_cast<std::uint32_t>(t.rank)) throw CheckpointError("rank mismatch for " + t.name);
    const std::uint32_t rows = rank == 2 ? r.u32("tensor dims") : 1;
    const std::uint32_t cols = r.u32("tensor dims");
    if (rows != static_cast<std::uint32_t>(t.rows) || cols != static_cast<std::uint32_t>(t.cols)) {
      throw CheckpointError("shape mismatch for " + t.name);
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = r.f32("tensor data");
  }
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const ModelParams<float>& params,
                            const TrainingMetadata& meta, const OptimState<float>* optim = nullptr) {
  const ModelConfig& c = params.config;
  detail::LeWriter w(os);
  w.bytes(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  for (int v : {c.vocab_size, c.d_model, c.n_heads, c.n_blocks, c.d_ffn, c.input_len, c.output_len}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u32(static_cast<std::uint32_t>(std::lround(c.dropout_rate * 1e6)));
  for (char sym : kSymbols) w.str(std::string(1, sym));
  w.u64(meta.seed);
  w.u64(meta.steps);
  w.f64(meta.stage_accuracy);
  detail::write_tensors(w, params);
  w.u32(optim != nullptr ? 1 : 0);
  if (optim != nullptr) {
    detail::write_tensors(w, optim->first_moment);
    detail::write_tensors(w, optim->second_moment);
  }
  if (!os) throw CheckpointError("write failed");
}

inline void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                            const TrainingMetadata& meta, const OptimState<float>* optim = nullptr) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open '" + path + "' for writing");
  save_checkpoint(os, params, meta, optim);
  os.flush();
  if (!os) throw CheckpointError("write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(std::istream& is) {
  detail::LeReader r(is);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw CheckpointError("bad magic: not a CCAT checkpoint");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  ModelConfig c;
  int* fields[] = {&c.vocab_size, &c.d_model, &c.n_heads, &c.n_blocks, &c.d_ffn, &c.input_len, &c.output_len};
  for (int* f : fields) {
    const std::uint32_t v = r.u32("config");
    if (v > (1u << 20)) throw CheckpointError("implausible config value");
    *f = static_cast<int>(v);
  }
  c.dropout_rate = r.u32("config") / 1e6;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid model config: ") + e.what());
  }
  for (std::size_t i = 0; i < kSymbols.size(); ++i) {
    const std::string sym = r.str("vocabulary", 16);
    if (sym != std::string(1, kSymbols[i])) {
      throw CheckpointError("vocabulary mismatch at id " + std::to_string(i));
    }
  }
  Checkpoint ck;
  ck.metadata.seed = r.u64("metadata");
  ck.metadata.steps = r.u64("metadata");
  ck.metadata.stage_accuracy = r.f64("metadata");
  ck.params = zeros_like<float>(c);
  detail::read_tensors(r, ck.params);
  const std::uint32_t has_optim = r.u32("optimizer flag");
  if (has_optim > 1) throw CheckpointError("bad optimizer-state flag");
  if (has_optim == 1) {
    OptimState<float> st = OptimState<float>::zeros(c);
    detail::read_tensors(r, st.first_moment);
    detail::read_tensors(r, st.second_moment);
    st.step = ck.metadata.steps;
    ck.optim = std::move(st);
  }
  return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(is);
}

}  // namespace ccat
