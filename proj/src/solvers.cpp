// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#include "blockry/solvers.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "blockry/kernels.hpp"

namespace blockry {
namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}

GmresFactorization::GmresFactorization(Matrix s0, double rank_tol_factor)
    : block_size_(s0.cols()), rank_tol_factor_(rank_tol_factor), s0_(std::move(s0)) {
  if (s0_.rows() != s0_.cols() || s0_.rows() < 1) {
    throw contract_error("GmresFactorization: s0 must be square");
  }
  if (rank_tol_factor_ <= 0.0) {
    throw contract_error("GmresFactorization: rank_tol_factor must be positive");
  }
  pending_c_tilde_ = s0_;  // Ctilde_1
  q21_product_ = Matrix::Identity(block_size_, block_size_);
  r_.resize(0, 0);
  g_.resize(0, block_size_);
}

const IterationBlocks& GmresFactorization::blocks(Index j) const {
  if (j < 1 || j > iterations_) throw contract_error("blocks: iteration out of range");
  return history_[static_cast<std::size_t>(j - 1)];
}

Matrix GmresFactorization::z_block(Index j) const {
  if (j < 1 || j > iterations_) throw contract_error("z_block: iteration out of range");
  return r_.block(0, (j - 1) * block_size_, (j - 1) * block_size_, block_size_);
}

Vector GmresFactorization::cheap_residual_norms() const {
  Vector norms(block_size_);
  for (Index i = 0; i < block_size_; ++i) norms(i) = pending_c_tilde_.col(i).norm();
  return norms;
}

void GmresFactorization::advance(const Matrix& column) {
  const Index L = block_size_;
  const Index j = iterations_ + 1;
  if (column.rows() != (j + 1) * L || column.cols() != L) {
    throw contract_error("advance_factorization: column block has the wrong shape");
  }

  Matrix work = column;
  for (Index i = 1; i < j; ++i) {
    auto rows = work.middleRows((i - 1) * L, 2 * L);
    rows = history_[static_cast<std::size_t>(i - 1)].h_hat * rows;
  }

  IterationBlocks rec;
  rec.c_tilde = pending_c_tilde_;
  rec.hhat_jj = work.middleRows((j - 1) * L, L);
  const Matrix h_sub = work.bottomRows(L);

  // Square-Hessenberg side: a rank-revealing factorization of the transformed
  // diagonal block yields Qhat^(b), Mhat, Y2 and Nhat = [Y2; 0].
  Matrix stacked(2 * L, L);
  stacked.topRows(L) = rec.hhat_jj;
  stacked.bottomRows(L) = h_sub;
  const double scale =
      stacked.size() == 0 ? 0.0 : Eigen::JacobiSVD<Matrix>(stacked).singularValues()(0);
  const double zero_tol =
      rank_tol_factor_ * 2.0 * static_cast<double>(L) * kEps * scale;
  EchelonQr diag_qr = echelon_qr(rec.hhat_jj, zero_tol, /*full_q=*/true);
  rec.structural_rank = diag_qr.rank;
  rec.qb_hat = diag_qr.q.transpose();
  rec.n_hat = diag_qr.r;
  rec.m_hat = diag_qr.q.leftCols(diag_qr.rank);
  rec.y2 = diag_qr.r.topRows(diag_qr.rank);
  rec.c_hat = rec.qb_hat * pending_c_tilde_;

  // Rectangular side: annihilate H_{j+1,j} against the diagonal block.
  QrFactors stack_qr = householder_qr(stacked);
  rec.h_hat = stack_qr.q.transpose();
  rec.n = stack_qr.r.topRows(L);
  rec.c = rec.h_hat.topLeftCorner(L, L) * pending_c_tilde_;

  const Matrix q21 = rec.h_hat.bottomLeftCorner(L, L);
  pending_c_tilde_ = q21 * pending_c_tilde_;
  q21_product_ = q21 * q21_product_;

  Matrix grown = Matrix::Zero(j * L, j * L);
  grown.topLeftCorner((j - 1) * L, (j - 1) * L) = r_;
  grown.topRightCorner((j - 1) * L, L) = work.topRows((j - 1) * L);  // Z_j
  grown.bottomRightCorner(L, L) = rec.n;
  r_ = std::move(grown);

  g_.conservativeResize(j * L, L);
  g_.bottomRows(L) = rec.c;

  history_.push_back(std::move(rec));
  iterations_ = j;
}

namespace {

Vector fom_projected_residual_norms(const BlockArnoldiState& state, const Matrix& y) {
  const Index L = state.block_size();
  const Index j = state.iterations();
  Matrix rhs = Matrix::Zero((j + 1) * L, L);
  rhs.topRows(L) = state.s0();
  const Matrix resid = rhs - state.hessenberg() * y;
  Vector norms(L);
  for (Index i = 0; i < L; ++i) norms(i) = resid.col(i).norm();
  return norms;
}

}  // namespace

void gmres_iterate(const BlockArnoldiState& state, const GmresFactorization& fact,
                   IteratePair& out) {
  const Index j = fact.iterations();
  const Index L = fact.block_size();
  if (j < 1) throw contract_error("gmres_iterate: no iterations advanced");
  // R is triangular, so singularity shows on the diagonal.
  const double diag_min = fact.r().diagonal().cwiseAbs().minCoeff();
  const double r_scale = fact.r().cwiseAbs().maxCoeff();
  if (diag_min <= static_cast<double>(j * L) * kEps * r_scale) {
    throw std::runtime_error("Arnoldi basis degenerate: singular R factor");
  }
  out.y_gmres = fact.r().triangularView<Eigen::Upper>().solve(fact.g());
  out.x_gmres = state.x0() + state.basis_prefix(j) * out.y_gmres;
  out.gmres_residual_norms = fact.cheap_residual_norms();
  // Residual rank against the initial-residual scale, so a fully converged
  // (roundoff-level) block reads as rank zero.
  const double s0_scale = Eigen::JacobiSVD<Matrix>(fact.s0()).singularValues()(0);
  out.residual_rank =
      numerical_rank(fact.pending_c_tilde(), fact.rank_tol_factor(), s0_scale);
}

void fom_iterate(const BlockArnoldiState& state, const GmresFactorization& fact,
                 IteratePair& out) {
  const Index j = fact.iterations();
  const Index L = fact.block_size();
  if (j < 1) throw contract_error("fom_iterate: no iterations advanced");
  const IterationBlocks& rec = fact.blocks(j);

  out.fom_is_generalized = rec.structural_rank < L;
  const Matrix bottom =
      out.fom_is_generalized
          ? Matrix(pinv_structured_upper(rec.n_hat, fact.rank_tol_factor()) * rec.c_hat)
          : Matrix(rec.n_hat.triangularView<Eigen::Upper>().solve(rec.c_hat));
  Matrix y((j)*L, L);
  if (j > 1) {
    const Matrix g_prev = fact.g().topRows((j - 1) * L);
    const Matrix rhs = g_prev - fact.z_block(j) * bottom;
    y.topRows((j - 1) * L) = fact.r()
                                 .topLeftCorner((j - 1) * L, (j - 1) * L)
                                 .triangularView<Eigen::Upper>()
                                 .solve(rhs);
  }
  y.bottomRows(L) = bottom;
  out.y_fom = y;
  out.x_fom = state.x0() + state.basis_prefix(j) * y;
  out.fom_residual_norms = fom_projected_residual_norms(state, y);
}

IteratePair compute_iterates(const BlockArnoldiState& state,
                             const GmresFactorization& fact) {
  IteratePair pair;
  gmres_iterate(state, fact, pair);
  fom_iterate(state, fact, pair);
  return pair;
}

ProgressiveUpdates progressive_updates(const GmresFactorization& fact) {
  return progressive_updates(fact, fact.iterations());
}

ProgressiveUpdates progressive_updates(const GmresFactorization& fact, Index j) {
  const Index L = fact.block_size();
  if (j < 1 || j > fact.iterations()) {
    throw contract_error("progressive_updates: requires 1 <= j <= iterations");
  }
  const IterationBlocks& rec = fact.blocks(j);

  ProgressiveUpdates out;
  const Matrix bottom_g = rec.n.triangularView<Eigen::Upper>().solve(rec.c);
  const Matrix n_hat_pinv = pinv_structured_upper(rec.n_hat, fact.rank_tol_factor());
  const Matrix bottom_f = n_hat_pinv * rec.c_hat;
  out.s_gmres = Matrix::Zero(j * L, L);
  out.s_fom = Matrix::Zero(j * L, L);
  if (j > 1) {
    const auto r_prev =
        fact.r().topLeftCorner((j - 1) * L, (j - 1) * L).triangularView<Eigen::Upper>();
    const Matrix z = fact.z_block(j);
    out.s_gmres.topRows((j - 1) * L) = -r_prev.solve(Matrix(z * bottom_g));
    out.s_fom.topRows((j - 1) * L) = -r_prev.solve(Matrix(z * bottom_f));
  }
  out.s_gmres.bottomRows(L) = bottom_g;
  out.s_fom.bottomRows(L) = bottom_f;
  return out;
}

Vector explicit_residual_norms(const BlockOperator& op, const Matrix& b, const Matrix& x) {
  const Matrix resid = b - op.apply(x);
  Vector norms(resid.cols());
  for (Index i = 0; i < resid.cols(); ++i) norms(i) = resid.col(i).norm();
  return norms;
}

}  // namespace blockry
