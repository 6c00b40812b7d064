#pragma once

#include <stdexcept>
#include <string>

namespace ccat {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSymbol : public Error {
 public:
  UnknownSymbol(char symbol, std::size_t position)
      : Error("unknown symbol '" + printable(symbol) + "' at position " +
              std::to_string(position)),
        symbol_(symbol),
        position_(position) {}

  char symbol() const noexcept { return symbol_; }
  std::size_t position() const noexcept { return position_; }

 private:
  static std::string printable(char c) {
    if (c == '\n') return "\\n";
    if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f) {
      return "\\x" + std::to_string(static_cast<unsigned char>(c));
    }
    return std::string(1, c);
  }

  char symbol_;
  std::size_t position_;
};

class OutOfRangeId : public Error {
 public:
  explicit OutOfRangeId(int id)
      : Error("token id " + std::to_string(id) + " is outside [0,13]") {}
};

class TooLong : public Error {
 public:
  TooLong(std::size_t length, std::size_t limit)
      : Error("sequence of length " + std::to_string(length) +
              " exceeds fixed length " + std::to_string(limit)) {}
};

// A string that is not a canonical non-negative decimal integer.
class InvalidDigits : public Error {
 public:
  using Error::Error;
};

class EmptyStageList : public Error {
 public:
  EmptyStageList() : Error("cannot collate an empty list of stage outputs") {}
};

class BadPrefix : public Error {
 public:
  BadPrefix() : Error("output prefix must start with the '\\n' token") {}
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss() : Error("loss is not finite") {}
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccat
