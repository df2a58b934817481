// Scalar/matrix aliases, tolerance constants and error types shared across
// the library.

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cgd {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

// Relative tolerances for invariant checks.
inline constexpr double kHermTol = 1e-10;      // Hermitian symmetry
inline constexpr double kEigFloorRel = 1e-12;  // admissible lambda_min / lambda_max
inline constexpr double kUnitDetTol = 1e-8;    // |log det| bound on unit-det matrices
inline constexpr double kTracelessTol = 1e-8;  // tangent trace condition
inline constexpr double kUnderflowGuard = 1e-300;

/// Operand shapes (or tangent base points) do not match.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Input lies outside the mathematical domain of the operation
/// (not Hermitian, not positive definite, zero sample, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

/// An iterative method failed to converge or produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File reading/writing or parsing failure.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cgd
