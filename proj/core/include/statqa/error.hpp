#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace statqa {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input could not be parsed. `offset()` is the byte position reported by the parser.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Input parsed but violates a data invariant (duplicate key, bad choice count, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A scorer backend answered with something that breaks the wire contract.
/// Never retried.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A scorer backend could not be reached or timed out. Retriable.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace statqa
