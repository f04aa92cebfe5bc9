#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evfgn {

enum class ErrorKind {
  InvalidShape,
  NonFinite,
  MissingGradPath,
  Divergence,
  Parse,
  RaggedRows,
  InsufficientData,
  EmptyEvaluation,
  ZeroRepresentation,
  IncompatibleCheckpoint,
  Config,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& cell)
      : Error(ErrorKind::Parse, "cannot parse cell '" + cell + "' at row " + std::to_string(row) +
                                    ", column " + std::to_string(col)),
        row_(row),
        col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(std::size_t epoch)
      : Error(ErrorKind::Divergence, "non-finite training loss in epoch " + std::to_string(epoch)),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace evfgn
