#pragma once

#include <stdexcept>
#include <string>

namespace calibench {

/// Bad invocation or malformed configuration. CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/// Unreadable or inconsistent input data. CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Model backend failure (missing credentials, transport, quota). Exit code 3.
class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace calibench
