#pragma once

#include <stdexcept>
#include <string>

namespace rdlasso {

/// Base class for all estimation-time failures.
class EstimationError : public std::runtime_error {
public:
  explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// One side of the cutoff has no retained observations.
class EmptySideError : public EstimationError {
public:
  explicit EmptySideError(const std::string& msg) : EstimationError(msg) {}
};

/// Weighted Gram matrix is numerically singular (rcond below threshold).
class SingularDesignError : public EstimationError {
public:
  explicit SingularDesignError(const std::string& msg) : EstimationError(msg) {}
};

/// Not enough observations on a side for the requested fit.
class InsufficientDataError : public EstimationError {
public:
  explicit InsufficientDataError(const std::string& msg) : EstimationError(msg) {}
};

/// Pilot residual variance is zero; penalty loadings are undefined.
class DegenerateResidualsError : public EstimationError {
public:
  explicit DegenerateResidualsError(const std::string& msg) : EstimationError(msg) {}
};

/// Fuzzy denominator jump is indistinguishable from zero.
class WeakDiscontinuityError : public EstimationError {
public:
  explicit WeakDiscontinuityError(const std::string& msg) : EstimationError(msg) {}
};

/// Data-file problems, raised during CSV ingestion.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class FileNotFoundError : public DataError {
public:
  explicit FileNotFoundError(const std::string& msg) : DataError(msg) {}
};

class ParseError : public DataError {
public:
  ParseError(std::size_t line, const std::string& column, const std::string& msg)
      : DataError(msg), line(line), column(column) {}
  std::size_t line;
  std::string column;
};

class MissingColumnError : public DataError {
public:
  explicit MissingColumnError(const std::string& name)
      : DataError("missing column: " + name), name(name) {}
  std::string name;
};

}  // namespace rdlasso
