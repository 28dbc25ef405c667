#pragma once

#include <stdexcept>
#include <string>

namespace qkdnet {

/// An argument lies outside the domain of the operation (negative length,
/// mismatched key sizes, unknown node id, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The operation was invoked in the wrong mode, e.g. an uplink parameter set
/// passed to the downlink model.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A relay protocol could not complete (missing segment key, ...).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration or input-file problem; `where` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what),
        where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace qkdnet
