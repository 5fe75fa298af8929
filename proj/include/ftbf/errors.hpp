#pragma once

#include <stdexcept>
#include <string>

namespace ftbf {

/// Raised when an argument falls outside an operation's domain.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a point leaves the region where the concave surrogate is defined.
class TrustRegionViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UnsupportedScheme : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Config file problem. Carries the offending key and (1-based) line when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string key = {}, int line = 0)
      : std::runtime_error(format(message, key, line)), key_(std::move(key)), line_(line) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& message, const std::string& key, int line) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!key.empty()) out += "key '" + key + "': ";
    return out + message;
  }

  std::string key_;
  int line_ = 0;
};

}  // namespace ftbf
