// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace road {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes or lengths do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A computation produced or consumed a non-finite value.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A documented precondition of an operation was violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A representation metric is undefined for the given input (e.g. zero norm).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Subspace masks passed to composition overlap.
class CompositionConflict : public Error {
 public:
  CompositionConflict(const std::string& what, std::vector<std::size_t> blocks)
      : Error(what), blocks_(std::move(blocks)) {}

  const std::vector<std::size_t>& colliding_blocks() const noexcept { return blocks_; }

 private:
  std::vector<std::size_t> blocks_;
};

/// A serving call mixes adapter kinds or references unknown adapters.
class RoutingError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, std::size_t epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// The timed workload is too small for the clock to resolve.
class MeasurementError : public Error {
 public:
  using Error::Error;
};

/// An adapter file failed validation; field() names the offending field.
class CorruptFileError : public Error {
 public:
  CorruptFileError(const std::string& field, const std::string& detail)
      : Error("corrupt adapter file: " + field + ": " + detail), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Configuration document is malformed or has unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace road
