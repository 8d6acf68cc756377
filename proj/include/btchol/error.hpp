#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace btchol {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A pivot was <= 0 after downdate. `pivot()` is the 1-based row inside the
/// failing block; `block()` is the 1-based original block index (0 if not
/// known) and `where()` describes the position in strategy terms.
class NotPositiveDefinite : public Error {
public:
  explicit NotPositiveDefinite(std::size_t pivot, std::string where = {}, std::size_t block = 0)
      : Error(make_message(pivot, where)), pivot_(pivot), block_(block), where_(std::move(where)) {}

  std::size_t pivot() const noexcept { return pivot_; }
  std::size_t block() const noexcept { return block_; }
  const std::string& where() const noexcept { return where_; }

  /// Same failure, annotated with the block that was being factored.
  NotPositiveDefinite located(std::string where, std::size_t block = 0) const {
    return NotPositiveDefinite(pivot_, std::move(where), block);
  }

private:
  static std::string make_message(std::size_t pivot, const std::string& where) {
    std::string msg = "matrix is not positive definite (pivot " + std::to_string(pivot);
    if (!where.empty())
      msg += ", " + where;
    return msg + ")";
  }

  std::size_t pivot_;
  std::size_t block_;
  std::string where_;
};

class SingularTriangular : public Error {
public:
  explicit SingularTriangular(std::size_t k)
      : Error("triangular factor has zero diagonal at row " + std::to_string(k)) {}
};

class ShapeMismatch : public Error {
public:
  using Error::Error;
};

class InfeasiblePartition : public Error {
public:
  using Error::Error;
};

class IncompleteFactor : public Error {
public:
  using Error::Error;
};

class DeadlockDetected : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

} // namespace btchol
