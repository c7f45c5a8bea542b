#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace typar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad command line or configuration. CLI exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data. CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MissingLanguageError : public DataError {
 public:
  using DataError::DataError;
};

class FormatVersionError : public DataError {
 public:
  using DataError::DataError;
};

class ChecksumError : public DataError {
 public:
  using DataError::DataError;
};

// A broken internal contract (shape mismatch, non-finite value). CLI exit code 3.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace typar
