#pragma once

#include <stdexcept>
#include <string>

namespace imputeinr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV rows, config files).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row = -1)
      : Error(row >= 0 ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

class EmptyDataError : public Error {
 public:
  using Error::Error;
};

class WindowTooLarge : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class PatchError : public Error {
 public:
  using Error::Error;
};

/// Non-finite activation, loss or gradient encountered.
class NumericsError : public Error {
 public:
  using Error::Error;
};

/// A loss or metric was requested over an empty set of scored positions.
class EmptyMaskSet : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or report with an unknown or mismatched format.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace imputeinr
