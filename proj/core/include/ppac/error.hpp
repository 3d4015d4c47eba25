#pragma once

#include <stdexcept>
#include <string>

namespace ppac {

/// Invalid parameters or shapes; the message names the offending field.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent files.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values encountered during training or evaluation.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// The requested resource has nothing to give (e.g. sampling an empty memory).
class Unavailable : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace ppac
