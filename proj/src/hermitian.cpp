#include "cgd/hermitian.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace cgd {

namespace {

void require_square(const CMat& a, const char* op) {
  if (a.rows() != a.cols()) {
    std::ostringstream msg;
    msg << op << ": expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw DimensionError(msg.str());
  }
}

void require_hermitian(const CMat& a, const char* op) {
  require_square(a, op);
  if (!is_hermitian(a)) {
    std::ostringstream msg;
    msg << op << ": input is not Hermitian (||A - A^H|| = "
        << (a - a.adjoint()).norm() << ", ||A|| = " << a.norm() << ")";
    throw DomainError(msg.str());
  }
}

// f applied to the spectrum; `positive` additionally enforces the HPD domain.
CMat spectral_apply(const CMat& a, const std::function<double(double)>& f,
                    bool positive, const char* op) {
  const EigH ed = eig_h(a);
  if (positive) {
    const double lambda_max = ed.eigenvalues(ed.eigenvalues.size() - 1);
    const double lambda_min = ed.eigenvalues(0);
    if (lambda_max <= 0.0 || lambda_min <= kEigFloorRel * lambda_max) {
      std::ostringstream msg;
      msg << op << ": matrix is not positive definite (lambda_min = " << lambda_min
          << ", lambda_max = " << lambda_max << ")";
      throw DomainError(msg.str());
    }
  }
  RVec mapped = ed.eigenvalues.unaryExpr(f);
  CMat result = ed.eigenvectors * mapped.asDiagonal() * ed.eigenvectors.adjoint();
  return herm_part(result);
}

}  // namespace

CMat herm_part(const CMat& a) {
  require_square(a, "herm_part");
  return 0.5 * (a + a.adjoint());
}

bool is_hermitian(const CMat& a, double tol) {
  if (a.rows() != a.cols()) return false;
  return (a - a.adjoint()).norm() <= tol * std::max(1.0, a.norm());
}

EigH eig_h(const CMat& a) {
  require_hermitian(a, "eig_h");
  Eigen::SelfAdjointEigenSolver<CMat> solver(a);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eig_h: eigensolver failed to converge on a " << a.rows() << "x"
        << a.cols() << " matrix with ||A|| = " << a.norm();
    throw NumericalError(msg.str());
  }
  return EigH{solver.eigenvalues(), solver.eigenvectors()};
}

CMat mat_exp(const CMat& a) {
  return spectral_apply(a, [](double x) { return std::exp(x); }, false, "mat_exp");
}

CMat mat_log(const CMat& a) {
  return spectral_apply(a, [](double x) { return std::log(x); }, true, "mat_log");
}

CMat mat_sqrt(const CMat& a) {
  return spectral_apply(a, [](double x) { return std::sqrt(x); }, true, "mat_sqrt");
}

CMat mat_inv_sqrt(const CMat& a) {
  return spectral_apply(a, [](double x) { return 1.0 / std::sqrt(x); }, true,
                        "mat_inv_sqrt");
}

CMat mat_pow(const CMat& a, double t) {
  return spectral_apply(a, [t](double x) { return std::pow(x, t); }, true, "mat_pow");
}

double logdet(const CMat& a) {
  require_hermitian(a, "logdet");
  Eigen::LLT<CMat> llt(a);
  if (llt.info() != Eigen::Success) {
    throw DomainError("logdet: matrix is not positive definite");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().real().array().log().sum();
}

CMat det_normalize(const CMat& a) {
  const double scale = std::exp(-logdet(a) / static_cast<double>(a.rows()));
  return scale * a;
}

}  // namespace cgd
