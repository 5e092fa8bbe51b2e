#pragma once

#include <stdexcept>
#include <string>

namespace mscme {

/// Bad input: malformed network file, inconsistent basis, unknown species,
/// mismatched supports. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error in a network or plan file, with the offending line number.
class ParseError : public ConfigError {
 public:
  ParseError(int line, const std::string& what)
      : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Solver non-convergence, reducible chain, unreachable endpoints and other
/// numerical failures. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mscme
