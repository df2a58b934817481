// Complex Hermitian linear-algebra primitives: eigendecomposition-backed
// matrix functions (exp, log, sqrt, powers), log-determinants and
// unit-determinant normalization.

#pragma once

#include "cgd/core.hpp"

namespace cgd {

/// Hermitian part (A + A^H) / 2 of a square matrix.
CMat herm_part(const CMat& a);

/// True when ||A - A^H|| <= tol * max(1, ||A||) (Frobenius).
bool is_hermitian(const CMat& a, double tol = kHermTol);

struct EigH {
  RVec eigenvalues;   // ascending
  CMat eigenvectors;  // unitary; column k pairs with eigenvalues[k]
};

/// Eigendecomposition A = U diag(lambda) U^H of a Hermitian matrix.
EigH eig_h(const CMat& a);

/// Spectral matrix functions f(A) = U diag(f(lambda)) U^H. The logarithm,
/// square roots and powers require positive definite input: they reject
/// matrices whose smallest eigenvalue falls below kEigFloorRel * lambda_max.
CMat mat_exp(const CMat& a);
CMat mat_log(const CMat& a);
CMat mat_sqrt(const CMat& a);
CMat mat_inv_sqrt(const CMat& a);
CMat mat_pow(const CMat& a, double t);

/// log det A of a Hermitian positive definite matrix (via Cholesky).
double logdet(const CMat& a);

/// A / exp(logdet(A)/p): same eigenvector frame, determinant rescaled to 1.
CMat det_normalize(const CMat& a);

}  // namespace cgd
