#pragma once

#include <stdexcept>
#include <string>

namespace resicomp {

// Bad parameters handed to a library entry point.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Entropy-coded payload does not decode under the supplied tables.
class CorruptStream : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File or stream could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A context slice required to decode `slice` was not received. Both indices
// are zero-based.
class SynchronizationError : public std::runtime_error {
 public:
  SynchronizationError(int slice, int missing)
      : std::runtime_error("slice " + std::to_string(slice + 1) +
                           " needs lost context slice " +
                           std::to_string(missing + 1)),
        slice_(slice),
        missing_(missing) {}

  int slice() const { return slice_; }
  int missing() const { return missing_; }

 private:
  int slice_;
  int missing_;
};

}  // namespace resicomp
