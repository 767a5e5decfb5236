#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcnnrank {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number of the offending line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Head assignment that does not form a rooted tree.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// Two trees (or files) that should describe the same sentences do not.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Input whose shape contradicts the model, e.g. a vector dimension mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, truncated or version-mismatched model container.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Operation called outside its domain (empty candidate list, bad grid step).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// File that cannot be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration key or value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rcnnrank
