#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chmm {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input; line is 1-based, 0 when not line-specific.
class ParseError : public Error {
public:
  ParseError(const std::string& detail, std::size_t line, const std::string& source = {})
      : Error(format(detail, line, source)), detail_(detail), line_(line) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

  ParseError in_file(const std::string& source) const { return {detail_, line_, source}; }

private:
  static std::string format(const std::string& detail, std::size_t line, const std::string& source) {
    std::string out = source;
    if (line) out += (out.empty() ? "line " : ":") + std::to_string(line);
    if (!out.empty()) out += ": ";
    return out + detail;
  }

  std::string detail_;
  std::size_t line_;
};

// Every composite state assigns zero density to the observation at step t (0-based).
class ZeroLikelihoodError : public Error {
public:
  explicit ZeroLikelihoodError(std::size_t t)
      : Error("zero-likelihood document: observation at step " + std::to_string(t) +
              " is impossible under the model"),
        step_(t) {}
  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

}  // namespace chmm
