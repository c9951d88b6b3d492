#pragma once

#include <stdexcept>
#include <string>

namespace bandbridge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor or raster extents.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid ModelSpec / SceneSpec / TrainSpec or other declarative record.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Input data violates an operation's precondition (constant truth, empty set, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  enum class Kind { Open, Write, CorruptHeader, TruncatedPayload, UnknownVersion };

  IoError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Command line misuse; the CLI maps this to exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace bandbridge
