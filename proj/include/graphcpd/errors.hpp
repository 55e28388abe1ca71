#pragma once

#include <stdexcept>
#include <string>

namespace graphcpd {

// A signal block whose sample covariance is identically zero; no dominant
// subspace can be extracted from it.
class DegenerateBlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when the correction parameter cannot be placed between the nominal
// and post-change drift means, i.e. the requested change is not separable.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed external data. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  explicit ParseError(const std::string& what)
      : std::runtime_error(what), line_(-1) {}

  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace graphcpd
