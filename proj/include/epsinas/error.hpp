#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace epsinas {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shape or dimension mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. position() is a 0-based character offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Unreadable, truncated or malformed files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument values (ranges, counts, configurations).
class ValueError : public Error {
 public:
  using Error::Error;
};

}  // namespace epsinas
