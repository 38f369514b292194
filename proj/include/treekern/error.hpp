#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace treekern {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Structurally invalid input: cycles, several roots, unknown labels, bad witnesses.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A configured resource limit (set-quantifier domain, node visits, bit budget) was hit.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

namespace detail {

// Translates a byte offset into a 1-based (line, column) pair.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

inline ParseError parse_error_at(const std::string& text, std::size_t offset, const std::string& message) {
  auto [line, column] = line_column(text, offset);
  return ParseError(message, line, column);
}

}  // namespace detail

}  // namespace treekern
