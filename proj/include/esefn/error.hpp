#pragma once

#include <stdexcept>
#include <string>

namespace esefn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An invalid hyper-parameter or architecture combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied data is invalid (labels, dims, empty batches).
class InputError : public Error {
 public:
  using Error::Error;
};

/// The API was driven in the wrong order (e.g. stepping without gradients).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced or supplied.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Binary checkpoint is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Feature CSV is malformed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Paired modality files disagree on sample order.
class PairingError : public Error {
 public:
  using Error::Error;
};

}  // namespace esefn
