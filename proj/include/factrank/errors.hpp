#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace factrank {

// Bad input data or configuration. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A line of a JSON-lines file failed to parse or validate.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : ValidationError(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A requested (sentence, claim, metric) score is absent in strict mode.
class MissingScoreError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace factrank
