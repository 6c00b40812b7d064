#pragma once

// Closed 14-symbol vocabulary: P S 0..9 \n C, with ids assigned in that order.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccat/errors.hpp"

namespace ccat {

using TokenId = std::int32_t;

inline constexpr int kVocabSize = 14;
inline constexpr std::size_t kInputLen = 5;
inline constexpr std::size_t kTargetLen = 3;

inline constexpr std::array<char, kVocabSize> kSymbols = {
    'P', 'S', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9', '\n', 'C'};

namespace token {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kStop = 1;
inline constexpr TokenId kDigit0 = 2;
inline constexpr TokenId kStart = 12;
inline constexpr TokenId kCarry = 13;

constexpr TokenId digit(int d) { return kDigit0 + d; }
constexpr bool is_digit(TokenId id) { return id >= kDigit0 && id < kDigit0 + 10; }
}  // namespace token

enum class SeqRole : std::uint8_t { kInput, kTarget, kOutputPrefix };

struct TokenSeq {
  std::vector<TokenId> ids;
  SeqRole role = SeqRole::kInput;

  std::size_t size() const noexcept { return ids.size(); }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

// Returns -1 for characters outside the vocabulary.
constexpr TokenId symbol_id(char c) {
  switch (c) {
    case 'P': return 0;
    case 'S': return 1;
    case '\n': return 12;
    case 'C': return 13;
    default:
      if (c >= '0' && c <= '9') return 2 + (c - '0');
      return -1;
  }
}

constexpr char id_symbol(TokenId id) {
  if (id < 0 || id >= kVocabSize) throw OutOfRangeId(id);
  return kSymbols[static_cast<std::size_t>(id)];
}

inline TokenSeq encode(std::string_view text, SeqRole role = SeqRole::kInput) {
  TokenSeq seq{{}, role};
  seq.ids.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const TokenId id = symbol_id(text[i]);
    if (id < 0) throw UnknownSymbol(text[i], i);
    seq.ids.push_back(id);
  }
  return seq;
}

inline std::string decode(std::span<const TokenId> ids) {
  std::string text;
  text.reserve(ids.size());
  for (TokenId id : ids) text.push_back(id_symbol(id));
  return text;
}

inline std::string decode(const TokenSeq& seq) { return decode(std::span<const TokenId>(seq.ids)); }

namespace detail {
inline TokenSeq pad_to(TokenSeq seq, std::size_t length) {
  if (seq.ids.size() > length) throw TooLong(seq.ids.size(), length);
  seq.ids.resize(length, token::kPad);
  return seq;
}
}  // namespace detail

inline TokenSeq pad_input(TokenSeq seq) {
  seq.role = SeqRole::kInput;
  return detail::pad_to(std::move(seq), kInputLen);
}

inline TokenSeq pad_target(TokenSeq seq) {
  seq.role = SeqRole::kTarget;
  return detail::pad_to(std::move(seq), kTargetLen);
}

// Escapes '\n' as the two characters "\n" for line-oriented dumps.
inline std::string escape_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '\n') {
      out += "\\n";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace ccat
