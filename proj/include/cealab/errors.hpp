#pragma once

#include <stdexcept>
#include <string>

namespace cealab {

/// Malformed or unreadable input data (instance files, recipes, result files).
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Structurally valid input that names an unrunnable experiment
/// (e.g. a sigma table that does not cover the requested beta grid).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A violated internal invariant; indicates a bug, not bad input.
class InternalError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Parse failure with position information.
class ParseError : public InputError {
  public:
    ParseError(const std::string& what, std::size_t line, std::size_t token)
        : InputError(what + " (line " + std::to_string(line) + ", token " +
                     std::to_string(token) + ")"),
          line_(line), token_(token) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t token() const noexcept { return token_; }

  private:
    std::size_t line_;
    std::size_t token_;
};

} // namespace cealab
