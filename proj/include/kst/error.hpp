#pragma once

#include <stdexcept>
#include <string>

namespace kst {

enum class ErrorKind {
  Config,
  Domain,
  Index,
  Shape,
  Numerical,
  Capacity,
  Construction,
  EmptyBasis,
  Incompatible,
  MissingCache,
  Io,
};

/// Base exception for the library. `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when the inner-function construction cannot be repaired.
class ConstructionError : public Error {
 public:
  ConstructionError(const std::string& what, int rank, int family, long cube_a, long cube_b)
      : Error(ErrorKind::Construction, what), rank_(rank), family_(family), cube_a_(cube_a), cube_b_(cube_b) {}
  int rank() const noexcept { return rank_; }
  int family() const noexcept { return family_; }
  long cube_a() const noexcept { return cube_a_; }
  long cube_b() const noexcept { return cube_b_; }

 private:
  int rank_;
  int family_;
  long cube_a_;
  long cube_b_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace kst
