#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clinitext {

// Base of every error the library raises. The CLI maps any of these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

// A required column/field is missing or has the wrong shape.
class SchemaError : public Error {
 public:
  SchemaError(std::string field, std::size_t line, const std::string& what)
      : Error(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what) : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateError : public Error {
 public:
  DuplicateError(std::string id, std::size_t line, const std::string& what)
      : Error(what), id_(std::move(id)), line_(line) {}
  const std::string& id() const noexcept { return id_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string id_;
  std::size_t line_;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

// Missing, corrupt or version-incompatible on-disk index.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Out-of-range rating; criterion() names the offending field.
class ValidationError : public Error {
 public:
  ValidationError(std::string criterion, const std::string& what)
      : Error(what), criterion_(std::move(criterion)) {}
  const std::string& criterion() const noexcept { return criterion_; }

 private:
  std::string criterion_;
};

// Transport failure, timeout or non-success HTTP status from a generation backend.
// status() is 0 when no HTTP response was received.
class BackendError : public Error {
 public:
  BackendError(int status, std::string body_excerpt, const std::string& what)
      : Error(what), status_(status), body_(std::move(body_excerpt)) {}
  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

// Backend answered 2xx but the body does not match the wire format.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace clinitext
