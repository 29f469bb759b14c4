#pragma once

#include <stdexcept>
#include <string>

namespace rdecay {

/// A computation could not reach its accuracy target (quadrature, ODE steps, matching).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed model descriptor or configuration file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rdecay
