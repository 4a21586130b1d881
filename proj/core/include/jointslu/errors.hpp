#pragma once

#include <stdexcept>

namespace jointslu {

// Error taxonomy shared by the whole library. The CLI maps these onto exit
// codes: ConfigError -> 2, DataError/InputError -> 3, NumericError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or malformed in-memory inputs.
class InputError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration, archive/shape mismatches, unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File parsing and dataset I/O failures.
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant (a bug, not a user mistake).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace jointslu
