#pragma once

#include <stdexcept>
#include <string>

namespace hoigen {

/// A backend could not be reached or answered with a transport-level failure.
/// Callers treat it as retryable.
class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A backend answered, but the payload violates the wire contract.
class BackendProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StorageFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A rating or score outside its allowed scale.
class RangeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hoigen
