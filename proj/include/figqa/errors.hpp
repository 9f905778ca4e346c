#pragma once

#include <stdexcept>
#include <string>

namespace figqa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A macro expands into itself (directly or through a cycle) past the depth bound.
class RecursionLimitExceeded : public Error {
 public:
  using Error::Error;
};

class MissingVariable : public Error {
 public:
  explicit MissingVariable(std::string name)
      : Error("missing template variable: " + name), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class MalformedResponse : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure; retried by the gateway.
class TransientError : public Error {
 public:
  using Error::Error;
};

/// Retries exhausted. The item is deferred and requeued, never dropped or judged.
class EndpointUnavailable : public Error {
 public:
  using Error::Error;
};

/// Credentials rejected. Fatal for the run.
class AuthError : public Error {
 public:
  using Error::Error;
};

class ImageUnreadable : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing or unreadable upstream stage output.
class InputError : public Error {
 public:
  using Error::Error;
};

class SchemaViolation : public Error {
 public:
  SchemaViolation(std::size_t line, std::string field, const std::string& detail)
      : Error("line " + std::to_string(line) + ", field '" + field + "': " + detail),
        line_(line),
        field_(std::move(field)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class InvalidFunnel : public Error {
 public:
  using Error::Error;
};

class InsufficientStratum : public Error {
 public:
  using Error::Error;
};

/// A mock backend received a request its script does not cover.
class UnscriptedRequest : public Error {
 public:
  using Error::Error;
};

}  // namespace figqa
