#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mbaccel {

/// Invalid arguments, malformed specs, mismatched dimensions. CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point outside the domain of a mirror map (e.g. a negative coordinate
/// handed to the entropy potential).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A LIBSVM line that could not be parsed; `line()` is 1-based.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised by the optimizers when a loss is non-finite or exceeds the
/// divergence threshold. CLI exit code 2.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t iteration, double loss)
      : std::runtime_error("divergence at iteration " + std::to_string(iteration) +
                           " (loss " + std::to_string(loss) + ")"),
        iteration_(iteration),
        loss_(loss) {}
  explicit DivergenceError(const std::string& what)
      : std::runtime_error(what), iteration_(0), loss_(0.0) {}
  std::size_t iteration() const noexcept { return iteration_; }
  double loss() const noexcept { return loss_; }

 private:
  std::size_t iteration_;
  double loss_;
};

using WarningSink = std::function<void(std::string_view)>;

// Warnings go to stderr unless a sink is installed. Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace mbaccel
