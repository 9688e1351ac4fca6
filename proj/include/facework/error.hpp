#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace facework {

// Base for every error the library raises about its inputs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, corpora, scores).
class DataError : public Error {
 public:
  using Error::Error;

  DataError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

// A value that does not belong to its domain, e.g. an unknown face-act code.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace facework
