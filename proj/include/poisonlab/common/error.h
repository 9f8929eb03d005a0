#pragma once

#include <stdexcept>
#include <string>

namespace poisonlab {

// Root of every error raised by the library. Each module derives the
// specific conditions its contract names.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace poisonlab
