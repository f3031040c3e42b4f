#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trackguard {

// Base for every error the engine reports. Callers that only need a
// diagnostic can catch this; the subclasses carry the failure class.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedUrl : public Error {
 public:
  using Error::Error;
};

class InvalidExpression : public Error {
 public:
  using Error::Error;
};

class InvalidUpdate : public Error {
 public:
  using Error::Error;
};

// The update's base version does not match the store. The caller should ask
// the server for a full snapshot.
class VersionMismatch : public Error {
 public:
  VersionMismatch(unsigned long long store_version,
                  unsigned long long update_from)
      : Error("update expects version " + std::to_string(update_from) +
              " but store is at " + std::to_string(store_version)),
        store_version_(store_version),
        update_from_(update_from) {}

  unsigned long long store_version() const { return store_version_; }
  unsigned long long update_from() const { return update_from_; }

 private:
  unsigned long long store_version_;
  unsigned long long update_from_;
};

class CorruptSnapshot : public Error {
 public:
  using Error::Error;
};

// Disconnect document failed validation. path() is a JSON pointer to the
// offending node.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class InvalidDomain : public Error {
 public:
  InvalidDomain(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  // 1-based; 0 when the domain did not come from a file.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownSession : public Error {
 public:
  using Error::Error;
};

class SiteUnreachable : public Error {
 public:
  using Error::Error;
};

class NetworkError : public Error {
 public:
  using Error::Error;
};

class HttpParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace trackguard
