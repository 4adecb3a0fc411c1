#pragma once

#include <stdexcept>
#include <string>

namespace tsense {

/// Input outside the domain a model is defined on (non-positive
/// temperature, table lookup out of range, non-positive bias current).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A configuration that is self-inconsistent. `path` names the offending
/// field when known (e.g. "osc.fast.n_stages").
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string path = {})
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Caller-supplied data that cannot be processed (exhausted period streams,
/// too few samples, missing table fields).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tsense
