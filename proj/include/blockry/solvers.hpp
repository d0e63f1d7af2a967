// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "blockry/arnoldi.hpp"
#include "blockry/types.hpp"

namespace blockry {

/// Per-iteration blocks recorded while the QR factorization of the block
/// Hessenberg matrix is advanced one block column at a time.
struct IterationBlocks {
  Matrix h_hat;     // 2L x 2L orthogonal transformation annihilating H_{j+1,j}
  Matrix hhat_jj;   // transformed diagonal block before that annihilation
  Matrix c_tilde;   // pending transformed rhs block entering this iteration
  Matrix c;         // progress block C_j = Q_j^(11) c_tilde
  Matrix c_hat;     // Chat_j = Qhat_j^(b) c_tilde
  Matrix n;         // N_j, upper triangular
  Matrix n_hat;     // Nhat_j = [Y2; 0]
  Matrix qb_hat;    // L x L orthogonal Qhat_j^(b) = [Mhat Mhat_perp]^T
  Matrix m_hat;     // L x r, orthonormal columns
  Matrix y2;        // r x L, upper triangular, full row rank
  Index structural_rank = 0;  // r, the number of nonzero rows of n_hat
};

/// Progressive QR of the block upper Hessenberg matrix together with the
/// transformed right-hand side stack. Orthogonal transformations are stored
/// explicitly as their nontrivial 2L x 2L blocks.
class GmresFactorization {
 public:
  explicit GmresFactorization(Matrix s0, double rank_tol_factor = 1.0);

  /// Consumes the j-th block column of Hbar (rows 1..(j+1)L). Applies the
  /// stored transformations, forms the new 2L x 2L transformation, grows the
  /// R factor and the transformed right-hand side, and records the C-matrices.
  void advance(const Matrix& new_hessenberg_column_block);

  Index block_size() const { return block_size_; }
  Index iterations() const { return iterations_; }
  const Matrix& s0() const { return s0_; }
  const Matrix& r() const { return r_; }
  const Matrix& g() const { return g_; }
  const Matrix& pending_c_tilde() const { return pending_c_tilde_; }
  const Matrix& q21_product() const { return q21_product_; }
  const IterationBlocks& blocks(Index j) const;
  Matrix z_block(Index j) const;  // Z_j, the top (j-1)L rows of R's j-th block column
  double rank_tol_factor() const { return rank_tol_factor_; }

  /// Column 2-norms of the pending block; these are the block GMRES residual
  /// column norms at the current iteration.
  Vector cheap_residual_norms() const;

 private:
  Index block_size_;
  Index iterations_ = 0;
  double rank_tol_factor_;
  Matrix s0_;
  Matrix r_;
  Matrix g_;
  Matrix pending_c_tilde_;
  Matrix q21_product_;
  std::vector<IterationBlocks> history_;
};

struct IteratePair {
  Matrix x_gmres;  // n x L
  Matrix x_fom;    // n x L, generalized when the square Hessenberg is singular
  Matrix y_gmres;  // jL x L
  Matrix y_fom;    // jL x L
  bool fom_is_generalized = false;
  Vector gmres_residual_norms;  // per-column 2-norms, from the pending block
  Vector fom_residual_norms;    // per-column 2-norms of E S0 - Hbar y_fom
  Index residual_rank = 0;      // rank of the pending block = rank of F_j
};

/// Block GMRES iterate via back-substitution on the R factor.
void gmres_iterate(const BlockArnoldiState& state, const GmresFactorization& fact,
                   IteratePair& out);

/// (Generalized) block FOM iterate assembled from the structured inverse of
/// the square R factor, with the structured pseudo-inverse of Nhat when the
/// square Hessenberg is singular.
void fom_iterate(const BlockArnoldiState& state, const GmresFactorization& fact,
                 IteratePair& out);

IteratePair compute_iterates(const BlockArnoldiState& state,
                             const GmresFactorization& fact);

struct ProgressiveUpdates {
  Matrix s_gmres;  // jL x L coordinates with X_j = X_{j-1} + W_j s_gmres
  Matrix s_fom;    // jL x L coordinates with Xtilde_j = X_{j-1} + W_j s_fom
};

ProgressiveUpdates progressive_updates(const GmresFactorization& fact);
ProgressiveUpdates progressive_updates(const GmresFactorization& fact, Index j);

/// Explicit per-column residual norms ||B - A X|| for cross-checking the
/// cheap update-based norms.
Vector explicit_residual_norms(const BlockOperator& op, const Matrix& b, const Matrix& x);

}  // namespace blockry
