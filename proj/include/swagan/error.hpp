#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace swagan {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes disagree with what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::uint64_t offset = 0)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when training produces a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace swagan
