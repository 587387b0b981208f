#pragma once

#include <stdexcept>
#include <string>

namespace kirimorph {

/// Base class for all library errors. The CLI maps each derived type to one
/// exit code (see tools/kirimorph.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible domain (gamma <= 0, margin too wide, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Two polygons overlap, or a polygon escapes the footprint after a transform.
class GeometryConflictError : public Error {
 public:
  using Error::Error;
};

/// Zero-area, self-intersecting or otherwise unusable geometry.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A query outside the range covered by the data (e.g. eps_m beyond the last sample).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Run configuration failed validation; the message names the offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-positive Jacobian at a quadrature point.
class InvertedElementError : public Error {
 public:
  InvertedElementError(std::size_t element, const std::string& detail)
      : Error("inverted element " + std::to_string(element) + ": " + detail), element_(element) {}
  std::size_t element() const noexcept { return element_; }

 private:
  std::size_t element_;
};

/// Factorization failed or the iterative solver did not converge.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

}  // namespace kirimorph
