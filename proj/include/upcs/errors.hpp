#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace upcs {

// Base class for everything this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error(line ? message + " (line " + std::to_string(line) + ")" : message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Structurally valid input that breaks a set-level rule (e.g. duplicate ids).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// One or more contract violations, collected rather than fail-fast.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}
  explicit ValidationError(const std::string& violation)
      : ValidationError(std::vector<std::string>{violation}) {}
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out.empty() ? std::string("validation failed") : out;
  }
  std::vector<std::string> violations_;
};

// Numerically meaningless input (zero-norm vector, etc).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A remote backend failed. retriable() distinguishes transport/5xx
// failures from permanent protocol errors.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& message, bool retriable)
      : Error(message), retriable_(retriable) {}
  bool retriable() const { return retriable_; }

 private:
  bool retriable_;
};

// A completion could not be parsed into the expected structure even
// after retries. Keeps the raw text for diagnosis.
class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& message, std::string raw_text = {})
      : Error(message), raw_text_(std::move(raw_text)) {}
  const std::string& raw_text() const { return raw_text_; }

 private:
  std::string raw_text_;
};

// A pipeline stage was requested before its prerequisite output exists.
class DependencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace upcs
