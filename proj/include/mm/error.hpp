#pragma once

#include <stdexcept>
#include <string>

namespace mm {

// Base for every domain error raised by the library. The CLI maps these to
// exit code 1; the session maps them to error responses.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class MalformedFrameError : public Error {
 public:
  explicit MalformedFrameError(const std::string& what) : Error("malformed-frame", what) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what) : Error("insufficient-data", what) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& what) : Error("not-found", what) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error("range", what) {}
};

class InvalidArgumentError : public Error {
 public:
  explicit InvalidArgumentError(const std::string& what) : Error("invalid-argument", what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error("schema", what) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what) : Error("version", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace mm
