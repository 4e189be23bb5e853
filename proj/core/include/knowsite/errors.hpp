#pragma once

#include <stdexcept>
#include <string>

namespace knowsite {

// Shape or size disagreement in tensor math.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& msg)
      : std::runtime_error("dimension: " + msg) {}
};

// A caller broke an operation's precondition.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg)
      : std::runtime_error("contract: " + msg) {}
};

// Invalid configuration value or combination.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg)
      : std::runtime_error("config: " + msg) {}
};

// Missing or unreadable input source.
class SourceError : public std::runtime_error {
 public:
  explicit SourceError(const std::string& msg)
      : std::runtime_error("source: " + msg) {}
};

// Malformed input row; message carries file:line.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg)
      : std::runtime_error("parse: " + msg) {}
};

// Name lookup failed (entity, relation, brand, ...).
class LookupError : public std::runtime_error {
 public:
  explicit LookupError(const std::string& msg)
      : std::runtime_error("lookup: " + msg) {}
};

}  // namespace knowsite
