// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "sentemb/real.hpp"

SENTEMB_NAMESPACE_BEGIN

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API precondition (non-scalar loss, mismatched optimizer state).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or a model/objective mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed runtime input: token id out of range, sequence too long, empty sentence.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The input has no usable content (all-masked row, zero-norm vector).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A dataset record is well-formed but carries an invalid value.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A file does not follow the expected layout (wrong column count, bad magic).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A structurally valid file whose contents are inconsistent (bad offsets, truncation).
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Correlation is undefined because one side is constant.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

SENTEMB_NAMESPACE_END
