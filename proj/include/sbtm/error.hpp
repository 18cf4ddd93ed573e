#pragma once

#include <stdexcept>
#include <string>

namespace sbtm {

// Error categories map onto the CLI exit-code contract:
// config -> 2, data -> 3, numeric -> 4.
enum class ErrorKind { config, data, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(ErrorKind::config, msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

}  // namespace sbtm
