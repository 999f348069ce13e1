#pragma once

#include <stdexcept>
#include <string>

namespace intentscan {

// Base class for everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data or configuration violates a documented contract
// (malformed records, out-of-range spans, unknown labels, missing files).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A serialized artifact carries a format version this build cannot read.
class VersionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A serialized artifact failed its integrity check.
class ChecksumError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace intentscan
