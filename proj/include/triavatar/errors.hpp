#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace triavatar {

// Base class for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Pixel or index outside its valid range.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// Mismatched dimensions between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid argument value (non-positive counts, bad flags, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Non-finite or otherwise unusable input data.
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite intermediate or diverged computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Point configuration too degenerate to solve (e.g. coincident points).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Malformed file; carries the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& msg, std::uint64_t offset)
      : Error(msg + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  explicit FormatError(const std::string& msg) : Error(msg), offset_(0) {}

  std::uint64_t byte_offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace triavatar
