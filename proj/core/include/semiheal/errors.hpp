#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semiheal {

  // Bad input: malformed tables, out-of-range parameters, violated
  // preconditions. The CLI maps these to exit code 1.
  class ValidationError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
  };

  // A table with MASKED cells was handed to an operation that needs a
  // complete table.
  class IncompleteTableError : public ValidationError {
   public:
    using ValidationError::ValidationError;
  };

  // Seed cells (or fixed cells) admit no associative completion.
  class UnsatisfiableError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
  };

  // Malformed serialized input. Carries the 1-based line number when the
  // source is line oriented (0 otherwise).
  class ParseError : public ValidationError {
   public:
    ParseError(std::string const& msg, std::size_t line)
        : ValidationError(line == 0 ? msg
                                    : "line " + std::to_string(line) + ": " + msg),
          _line(line) {}

    std::size_t line() const noexcept {
      return _line;
    }

   private:
    std::size_t _line;
  };

}  // namespace semiheal
