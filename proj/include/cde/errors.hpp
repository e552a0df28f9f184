#pragma once

#include <stdexcept>
#include <string>

namespace cde {

// Base class for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Structural invariant violated while building a graph, CPT, or model.
class GraphError : public Error {
 public:
  using Error::Error;
};

// A query is malformed for the graph it is asked of (unknown id, overlap,
// empty side).
class QueryError : public Error {
 public:
  using Error::Error;
};

// A request is well-formed but semantically inadmissible (regime node in the
// first argument of an ECI query, duplicate regime, non-binary PC query, ...).
class SemanticError : public Error {
 public:
  using Error::Error;
};

// The requested computation exceeds the configured desk-scale limits.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Conditioning on an event of (numerically) zero probability.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

// Supplied quantitative pieces contradict each other (e.g. coupling marginals
// that do not match the CPT rows they must reproduce).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// A plain numeric input is out of range.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Text input could not be parsed; carries a location.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, int line, int column, const std::string& msg)
      : Error(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace cde
