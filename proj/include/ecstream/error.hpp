#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecstream {

enum class ErrorCategory {
  config,      // malformed or invariant-violating input
  domain,      // argument outside a transform's region of existence
  infeasible,  // no feasible point (e.g. a server with utilization >= 1)
  io,
  numeric,
  validation,  // an analytical bound fell below its simulated estimate
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::infeasible: return "infeasible";
    case ErrorCategory::io: return "io";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::validation: return "validation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& detail)
      : std::runtime_error(detail), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& detail) : Error(ErrorCategory::config, detail) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& detail) : Error(ErrorCategory::domain, detail) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& detail)
      : Error(ErrorCategory::infeasible, detail) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& detail) : Error(ErrorCategory::io, detail) {}
};

}  // namespace ecstream
