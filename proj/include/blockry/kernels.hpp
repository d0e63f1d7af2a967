// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "blockry/types.hpp"

namespace blockry {

struct QrFactors {
  Matrix q;  // m x m orthogonal
  Matrix r;  // m x n upper triangular, subdiagonal entries stored as exact zeros
};

/// Householder QR of an m x n matrix, m >= n >= 1.
QrFactors householder_qr(const Matrix& a);

struct SvdFactors {
  Matrix u;                // m x min(m,n), orthonormal columns
  Vector singular_values;  // nonincreasing, nonnegative
  Matrix v;                // n x min(m,n), orthonormal columns
};

SvdFactors svd(const Matrix& a);

/// Count of singular values above tol_factor * max(m,n) * eps * reference,
/// where the reference is max(sigma_1, scale). The zero matrix has rank 0.
Index numerical_rank(const Matrix& a, double tol_factor = 1.0, double scale = 0.0);

/// Moore-Penrose pseudo-inverse of an L x L upper triangular matrix whose
/// trailing rows vanish, i.e. [Y2; 0] with Y2 of full row rank. The result has
/// the shape [* 0] with an L x (L-r) zero block on the right and satisfies the
/// four Penrose identities.
Matrix pinv_structured_upper(const Matrix& n_hat, double tol_factor = 1.0);

/// Householder QR that skips numerically dependent columns instead of
/// pivoting. The R factor is upper triangular in row-echelon form with exactly
/// `rank` nonzero rows; segments below the detected rank are stored as exact
/// zeros. A column is dependent when the norm of its active segment is at most
/// zero_tol.
struct EchelonQr {
  Matrix q;  // m x m when full_q, otherwise m x rank
  Matrix r;  // m x n
  Index rank = 0;
  std::vector<Index> dependent_columns;
};

EchelonQr echelon_qr(const Matrix& a, double zero_tol, bool full_q = true);

/// CS-decomposition of a 2L x 2L orthogonal matrix partitioned into L x L
/// blocks Q11, Q12, Q21, Q22:
///   Q11 = U1 C V1^T,  Q12 = U1 S V2^T,  Q21 = U2 S V1^T,  Q22 = -U2 C V2^T
/// with cosines ascending, sines descending and c_i^2 + s_i^2 = 1.
struct CsDecomposition {
  Matrix u1, u2, v1, v2;
  Vector cosines;  // ascending
  Vector sines;    // descending
  Vector angles;   // atan2(s, c), in [0, pi/2]
};

CsDecomposition cs_decompose(const Matrix& h_block);

/// Principal angles between the column spans of two orthonormal bases,
/// ascending, in [0, pi/2]. Cosines are the singular values of u^T v.
Vector principal_angles(const Matrix& basis_u, const Matrix& basis_v);
Vector principal_angle_cosines(const Matrix& basis_u, const Matrix& basis_v);

/// Equality up to left/right multiplication by diag(+-1). This is the
/// comparison rule for QR-derived quantities whose signs are
/// convention-dependent.
bool sign_equivalent(const Matrix& a, const Matrix& b, double tol = 1e-8);

/// Orthonormal basis of the column span, truncated at the numerical rank.
Matrix orthonormal_range(const Matrix& a, double tol_factor = 1.0, double scale = 0.0);

}  // namespace blockry
