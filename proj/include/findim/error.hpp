#ifndef FINDIM_ERROR_HPP
#define FINDIM_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace findim {

/// Base class for all findim errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Syntax or validation failure while reading an expression string.
class ParseError : public Error {
  public:
    ParseError(std::size_t offset, const std::string& msg)
        : Error(msg + " (at offset " + std::to_string(offset) + ")"),
          offset(offset), message(msg) {}
    std::size_t offset;
    std::string message;
};

/// Domain failure during expression evaluation (division by zero).
class EvalError : public Error {
  public:
    using Error::Error;
};

/// Config file cannot be read or fails validation.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// The diffusion matrix has a defective or complex spectrum.
class NotDiagonalizable : public Error {
  public:
    using Error::Error;
};

/// The diffusion matrix has a non-positive eigenvalue.
class NotPositive : public Error {
  public:
    using Error::Error;
};

/// A trajectory left the representable range; carries the blow-up time.
class BlowUp : public Error {
  public:
    explicit BlowUp(double t)
        : Error("solution blow-up at t = " + std::to_string(t)), time(t) {}
    double time;
};

/// No eigenvalue gap matched the selection rule.
class EmptySelection : public Error {
  public:
    using Error::Error;
};

/// The transformation matrices are too ill-conditioned to be useful.
class IllConditioned : public Error {
  public:
    using Error::Error;
};

/// A state pair with u = v cannot feed the residual test.
class DegeneratePair : public Error {
  public:
    using Error::Error;
};

}  // namespace findim

#endif
