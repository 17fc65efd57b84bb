#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simlr {

enum class ErrorCode {
  EmptyMatrix,
  MissingValue,
  EmptyIntersection,
  KTooLarge,
  RankDeficient,
  ShapeMismatch,
  DegenerateEmbedding,
  InvalidConfig,
  InvalidSpec,
  DegenerateSplit,
  LengthMismatch,
  Parse,
  Io,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Location is 1-based, as a user reads it in the input file.
class MissingValueError : public Error {
 public:
  MissingValueError(std::size_t row, std::size_t col)
      : Error(ErrorCode::MissingValue,
              "missing value at (" + std::to_string(row) + "," + std::to_string(col) + ")"),
        row_(row), col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

}  // namespace simlr
