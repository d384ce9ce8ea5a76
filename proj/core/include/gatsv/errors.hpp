// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gatsv {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree (matmul inner dims, elementwise shapes, SSE dims).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Value outside an operation's domain (log of non-positive, non-finite data).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller passed an argument that violates a precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Corpus or trial content cannot satisfy a request.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure during optimization.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Malformed file. Carries the byte offset (binary) or line number (text)
// where parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace gatsv
