#pragma once

#include <stdexcept>
#include <string>

namespace cinnrl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand extents do not chain (matrix product, layer widths, block splits).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A least-squares system or a sub-block of an orthogonal map lost column rank.
class RankError : public Error {
 public:
  using Error::Error;
};

/// Malformed causal graph, cycle, or a plan that cannot chain.
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint, DAG, CSV or config document could not be read.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Training loss became non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace cinnrl
