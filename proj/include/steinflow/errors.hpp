#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace steinflow {

/// Raised when a caller violates an operation's precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the dataset readers; carries the 1-based source line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Non-finite values detected while running particle dynamics.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int iteration, std::size_t particle)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) +
                           ", particle " + std::to_string(particle) + ")"),
        iteration_(iteration),
        particle_(particle) {}

  int iteration() const noexcept { return iteration_; }
  std::size_t particle() const noexcept { return particle_; }

 private:
  int iteration_;
  std::size_t particle_;
};

}  // namespace steinflow
