#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace posbias {

// Failure categories double as CLI exit statuses.
enum class ErrorCategory {
  data = 1,
  config = 2,
  io = 3,
  remote = 4,
};

std::string_view category_name(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorCategory::data, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorCategory::config, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorCategory::io, message) {}
};

class RemoteError : public Error {
 public:
  explicit RemoteError(const std::string& message) : Error(ErrorCategory::remote, message) {}
};

class AuthError : public RemoteError {
 public:
  explicit AuthError(const std::string& message) : RemoteError(message) {}
};

}  // namespace posbias
