#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sizesym {

/// Base of every error thrown by the library. The CLI maps subclasses to
/// exit codes: ConfigError -> 1, DataError -> 2, everything else -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad flags, config keys or file paths.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates a documented format or invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// IPA string that cannot be segmented (e.g. a combining mark with no base).
class MalformedInput : public DataError {
 public:
  MalformedInput(const std::string& what, char32_t code_point)
      : DataError(what), code_point_(code_point) {}

  char32_t code_point() const noexcept { return code_point_; }

 private:
  char32_t code_point_;
};

/// A row-addressed failure while reading a delimited file.
class RowError : public DataError {
 public:
  RowError(std::string path, std::size_t row, const std::string& message)
      : DataError(path + ":" + std::to_string(row) + ": " + message),
        path_(std::move(path)),
        row_(row) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t row() const noexcept { return row_; }

 private:
  std::string path_;
  std::size_t row_;
};

/// Numerical or training failure (non-finite values, empty supervision...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A sample whose spread is zero, so no test statistic exists.
class DegenerateSample : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace sizesym
