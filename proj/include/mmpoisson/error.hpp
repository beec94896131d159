#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mmpoisson {

enum class ErrorKind {
  Validation,
  Dimension,
  Parse,
  SingularHankel,
  ComplexRoots,
  DegenerateDegree,
  IllSeparatedNodes,
  SingularJacobian,
  Infeasible,
  NotPositiveSemidefinite,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::Dimension: return "DimensionError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::SingularHankel: return "SingularHankel";
    case ErrorKind::ComplexRoots: return "ComplexRoots";
    case ErrorKind::DegenerateDegree: return "DegenerateDegree";
    case ErrorKind::IllSeparatedNodes: return "IllSeparatedNodes";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

// Process exit codes used by the CLI: 2 usage/dimension, 3 numerical, 4 I/O.
constexpr int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::Dimension:
    case ErrorKind::Parse:
      return 2;
    case ErrorKind::Io:
      return 4;
    default:
      return 3;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::Validation, what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::Dimension, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::Parse, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// The Hankel matrix of power sums is numerically singular. Carries the
/// determinant and the 1-norm condition number that triggered the rejection.
class SingularHankel : public Error {
 public:
  SingularHankel(double det, double cond)
      : Error(ErrorKind::SingularHankel,
              "Hankel matrix is singular or ill-conditioned (det=" +
                  std::to_string(det) + ", cond=" + std::to_string(cond) + ")"),
        det_(det),
        cond_(cond) {}

  double det() const noexcept { return det_; }
  double cond() const noexcept { return cond_; }

 private:
  double det_;
  double cond_;
};

class ComplexRoots : public Error {
 public:
  explicit ComplexRoots(double max_imag)
      : Error(ErrorKind::ComplexRoots,
              "denominator has complex roots (max |imag| = " +
                  std::to_string(max_imag) + ")"),
        max_imag_(max_imag) {}

  double max_imag() const noexcept { return max_imag_; }

 private:
  double max_imag_;
};

class DegenerateDegree : public Error {
 public:
  explicit DegenerateDegree(const std::string& what)
      : Error(ErrorKind::DegenerateDegree, what) {}
};

class IllSeparatedNodes : public Error {
 public:
  explicit IllSeparatedNodes(double min_gap)
      : Error(ErrorKind::IllSeparatedNodes,
              "nodes are not separated (min gap = " + std::to_string(min_gap) +
                  ")"),
        min_gap_(min_gap) {}

  double min_gap() const noexcept { return min_gap_; }

 private:
  double min_gap_;
};

class SingularJacobian : public Error {
 public:
  explicit SingularJacobian(const std::string& what)
      : Error(ErrorKind::SingularJacobian, what) {}
};

class InfeasibleSolution : public Error {
 public:
  explicit InfeasibleSolution(const std::string& what)
      : Error(ErrorKind::Infeasible, what) {}
};

class NotPositiveSemidefinite : public Error {
 public:
  explicit NotPositiveSemidefinite(double min_eigenvalue)
      : Error(ErrorKind::NotPositiveSemidefinite,
              "matrix is not positive semidefinite (min eigenvalue = " +
                  std::to_string(min_eigenvalue) + ")"),
        min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

}  // namespace mmpoisson
