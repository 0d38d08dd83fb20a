#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tracestyles {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument to an operation (bad K, empty corpus, index out of range).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed textual input. `offset` is a 0-based byte offset; `line` and
/// `column` are 1-based and zero when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset, std::size_t line = 0,
             std::size_t column = 0);

  std::size_t offset() const noexcept { return offset_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t offset_;
  std::size_t line_;
  std::size_t column_;
};

/// A formula that parses but cannot be evaluated against a model
/// (unknown atom or reward, type mismatch, ambiguous `state` filter).
class FormulaError : public Error {
 public:
  using Error::Error;
};

}  // namespace tracestyles
