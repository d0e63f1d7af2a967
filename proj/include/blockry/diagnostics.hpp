// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "blockry/kernels.hpp"
#include "blockry/solvers.hpp"
#include "blockry/types.hpp"

namespace blockry {

enum class StagnationCase {
  FomExists,             // square Hessenberg nonsingular
  PartialContribution,   // only an r-dimensional subspace of R(V_j) contributes
  TotalStagnation,       // the new basis block contributes nothing
};

const char* to_string(StagnationCase c);

struct StagnationReport {
  Index iteration = 0;
  Index rank_r = 0;             // rank of Nhat_j; rank H_j = (j-1)L + r
  StagnationCase classification = StagnationCase::FomExists;
  std::vector<Index> stagnated_columns;  // columns of C_j that vanish (0-based)
  CsDecomposition cs;           // of the j-th 2L x 2L transformation
  Vector principal_angles_vs_constraint;  // paired with the CS sines/cosines
  Index intersection_dim = 0;   // dim of the V_j-component of the GMRES update span
  Index breakdown_p = 0;
};

/// Classifies iteration j. The intersection dimension counts the principal
/// directions between span(S_j) and span(V_j) that are not orthogonal
/// (cosine above angle_tol); it equals rank_r whenever no earlier breakdown
/// occurred.
StagnationReport classify(const BlockArnoldiState& state, const GmresFactorization& fact,
                          Index j, double angle_tol = 1e-8);

/// Relative Frobenius residual of the trigonometric identity relating the
/// block GMRES iterate to the block FOM iterate and the previous GMRES
/// iterate through the CS cosines/sines. Requires a nonsingular square
/// Hessenberg (rank_r = L).
double verify_trig_relation(const IteratePair& pair, const Matrix& x_prev_gmres,
                            const GmresFactorization& fact);

/// Relative Frobenius residual of the weaker identity for the FOM-GMRES gap
/// that survives an earlier Arnoldi breakdown. Requires Y2 nonsingular
/// (rank_r = L at the current iteration).
double verify_breakdown_gap(const BlockArnoldiState& state, const IteratePair& pair,
                            const GmresFactorization& fact);

/// Splits the GMRES update S_j (computed from the iterates) into its
/// K_{j-1}-part and V_j-part and returns the relative residual of the
/// nilpotent-operator relation tying the first to the second.
double verify_nilpotent_split(const BlockArnoldiState& state,
                              const GmresFactorization& fact, Index j,
                              const Matrix& x_j_gmres, const Matrix& x_prev_gmres);

struct HessenbergRankStructure {
  Matrix m_hat;  // L x r, orthonormal columns
  Matrix y2;     // r x L, upper triangular
  Matrix y1;     // (j-1)L x L, Y1 = R_{j-1}^{ -1} Z_j
};

HessenbergRankStructure hessenberg_rank_structure(const GmresFactorization& fact, Index j);

/// Angles whose cosines are the CS cosines of the j-th transformation; they
/// are the principal angles between the previous GMRES residual range and the
/// j-th constraint space. Cross-checked (to check_tol on the cosines) against
/// an explicit computation from dense orthonormal bases.
Vector angles_vs_constraint_space(const BlockArnoldiState& state,
                                  const GmresFactorization& fact, Index j,
                                  double check_tol = 1e-8);

/// Sines of the principal angles between the initial residual range and the
/// j-th constraint space: the singular values of the running product of the
/// lower-left transformation blocks.
Vector initial_residual_sines(const GmresFactorization& fact);

}  // namespace blockry
