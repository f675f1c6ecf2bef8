#pragma once

#include <stdexcept>
#include <string>

namespace dyntx {

/// Base of every error raised by the library. `exit_code()` is the process
/// status the CLI reports for it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 2; }
};

/// Invalid configuration (scene specs, model/training configs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument to an operation (index out of range, shape mismatch).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed on-disk data (frame directories, JSON documents).
class FormatError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint manifest and payload disagree.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// A stored tensor does not match the architecture it is loaded into.
class ShapeMismatchError : public Error {
 public:
  ShapeMismatchError(const std::string& tensor, const std::string& detail)
      : Error("shape mismatch for tensor '" + tensor + "': " + detail), tensor_(tensor) {}
  const std::string& tensor() const { return tensor_; }

 private:
  std::string tensor_;
};

/// Metric undefined for an input (e.g. a frame without foreground mass).
class MetricError : public Error {
 public:
  MetricError(const std::string& what, int frame) : Error(what), frame_(frame) {}
  int frame() const { return frame_; }

 private:
  int frame_;
};

/// Non-finite values during generation or training.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long long step, std::string term)
      : Error(what), step_(step), term_(std::move(term)) {}
  int exit_code() const override { return 3; }
  long long step() const { return step_; }
  const std::string& term() const { return term_; }

 private:
  long long step_;
  std::string term_;
};

}  // namespace dyntx
