// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#include "blockry/diagnostics.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace blockry {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

Matrix thin_orthonormal_q(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

// GMRES iterate restricted to the first j iterations of the factorization.
Matrix gmres_x_at(const BlockArnoldiState& state, const GmresFactorization& fact,
                  Index j) {
  if (j == 0) return state.x0();
  const Index L = fact.block_size();
  const Matrix y = fact.r()
                       .topLeftCorner(j * L, j * L)
                       .triangularView<Eigen::Upper>()
                       .solve(fact.g().topRows(j * L));
  return state.x0() + state.basis_prefix(j) * y;
}

}  // namespace

const char* to_string(StagnationCase c) {
  switch (c) {
    case StagnationCase::FomExists: return "fom-exists";
    case StagnationCase::PartialContribution: return "partial-contribution";
    case StagnationCase::TotalStagnation: return "total-stagnation";
  }
  return "unknown";
}

StagnationReport classify(const BlockArnoldiState& state, const GmresFactorization& fact,
                          Index j, double angle_tol) {
  const Index L = fact.block_size();
  const IterationBlocks& rec = fact.blocks(j);

  StagnationReport report;
  report.iteration = j;
  report.breakdown_p = state.breakdown_p_at(j);

  // Rank is measured against the scale of the whole new Hessenberg column
  // (sigma_1 of N_j); during (near-)stagnation Nhat itself carries no usable
  // scale.
  const double scale = spectral_norm(rec.n);
  report.rank_r = numerical_rank(rec.n_hat, fact.rank_tol_factor(), scale);

  report.classification = report.rank_r == 0 ? StagnationCase::TotalStagnation
                          : report.rank_r == L ? StagnationCase::FomExists
                                               : StagnationCase::PartialContribution;

  const double column_floor = 1e-12 * fact.s0().norm();
  for (Index i = 0; i < L; ++i) {
    if (rec.c.col(i).norm() <= column_floor) report.stagnated_columns.push_back(i);
  }

  report.cs = cs_decompose(rec.h_hat);
  report.principal_angles_vs_constraint = report.cs.angles;

  // dim of the V_j-component of span(S_j): principal directions against
  // R(V_j) that are not orthogonal. Computed in W_j coordinates.
  const ProgressiveUpdates updates = progressive_updates(fact, j);
  const Matrix& ys = updates.s_gmres;
  Eigen::JacobiSVD<Matrix> dec(ys, Eigen::ComputeThinU);
  const Vector sigma = dec.singularValues();
  const double sigma_floor =
      std::max(static_cast<double>(std::max(ys.rows(), ys.cols())) * kEps *
                   (sigma.size() > 0 ? sigma(0) : 0.0),
               column_floor);
  Index span_dim = 0;
  while (span_dim < sigma.size() && sigma(span_dim) > sigma_floor) ++span_dim;
  if (span_dim > 0) {
    const Matrix basis = dec.matrixU().leftCols(span_dim);
    const Vector cos = Eigen::JacobiSVD<Matrix>(basis.bottomRows(L)).singularValues();
    for (Index i = 0; i < cos.size(); ++i) {
      if (cos(i) > angle_tol) ++report.intersection_dim;
    }
  }
  return report;
}

double verify_trig_relation(const IteratePair& pair, const Matrix& x_prev_gmres,
                            const GmresFactorization& fact) {
  const Index j = fact.iterations();
  const Index L = fact.block_size();
  const IterationBlocks& rec = fact.blocks(j);
  if (rec.structural_rank < L) {
    throw std::runtime_error("verify_trig_relation: relation requires nonsingular H");
  }
  const CsDecomposition cs = cs_decompose(rec.h_hat);
  const Matrix q = rec.m_hat.transpose() * cs.v1;  // unitary when r = L
  const Matrix cos_sq = q * cs.cosines.array().square().matrix().asDiagonal() * q.transpose();
  const Matrix sin_sq = q * cs.sines.array().square().matrix().asDiagonal() * q.transpose();

  const Eigen::PartialPivLU<Matrix> c_hat_lu(rec.c_hat);
  const Matrix k_cos = c_hat_lu.solve(cos_sq * rec.c_hat);
  const Matrix k_sin = c_hat_lu.solve(sin_sq * rec.c_hat);

  const Matrix lhs = pair.x_gmres - pair.x_fom * k_cos - x_prev_gmres * k_sin;
  const double denom = pair.x_gmres.norm();
  if (denom == 0.0) return lhs.norm();
  return lhs.norm() / denom;
}

double verify_breakdown_gap(const BlockArnoldiState& state, const IteratePair& pair,
                            const GmresFactorization& fact) {
  const Index j = fact.iterations();
  const Index L = fact.block_size();
  const IterationBlocks& rec = fact.blocks(j);
  if (rec.structural_rank < L) {
    throw std::runtime_error("verify_breakdown_gap: Y2 singular, numerical rank " +
                             std::to_string(rec.structural_rank));
  }
  const CsDecomposition cs = cs_decompose(rec.h_hat);
  const Matrix q = rec.m_hat.transpose() * cs.v1;
  const Matrix sin_sq = q * cs.sines.array().square().matrix().asDiagonal() * q.transpose();

  const Matrix inner = rec.y2.triangularView<Eigen::Upper>().solve(
      Matrix(sin_sq * rec.c_hat));
  // The leading block carries a minus sign: the top of Y^(F) - Y^(G) is
  // -R_{j-1}^{-1} Z_j times the trailing block difference.
  Matrix coords(j * L, L);
  if (j > 1) {
    coords.topRows((j - 1) * L) = -fact.r()
                                       .topLeftCorner((j - 1) * L, (j - 1) * L)
                                       .triangularView<Eigen::Upper>()
                                       .solve(Matrix(fact.z_block(j) * inner));
  }
  coords.bottomRows(L) = inner;

  const Matrix rhs = state.basis_prefix(j) * coords;
  const Matrix lhs = pair.x_fom - pair.x_gmres;
  const double scale = std::max(lhs.norm(), rhs.norm());
  const double floor = 64.0 * kEps * std::max(pair.x_gmres.norm(), pair.x_fom.norm());
  if (scale <= floor) return 0.0;
  return (lhs - rhs).norm() / scale;
}

double verify_nilpotent_split(const BlockArnoldiState& state,
                              const GmresFactorization& fact, Index j,
                              const Matrix& x_j_gmres, const Matrix& x_prev_gmres) {
  if (j < 2) throw contract_error("verify_nilpotent_split: requires j >= 2");
  const Index L = fact.block_size();
  const Matrix s = x_j_gmres - x_prev_gmres;
  const Matrix w_prev = state.basis_prefix(j - 1);
  const Matrix v_j = state.basis_prefix(j).rightCols(L);
  const Matrix s2_coords = v_j.transpose() * s;
  const Matrix s1 = w_prev * (w_prev.transpose() * s);

  const Matrix y1 = fact.r()
                        .topLeftCorner((j - 1) * L, (j - 1) * L)
                        .triangularView<Eigen::Upper>()
                        .solve(fact.z_block(j));
  const Matrix predicted = -w_prev * (y1 * s2_coords);

  const double scale = std::max(s1.norm(), predicted.norm());
  const double floor = 64.0 * kEps * std::max(1.0, x_j_gmres.norm());
  if (scale <= floor) return 0.0;
  return (s1 - predicted).norm() / scale;
}

HessenbergRankStructure hessenberg_rank_structure(const GmresFactorization& fact,
                                                  Index j) {
  const Index L = fact.block_size();
  const IterationBlocks& rec = fact.blocks(j);
  HessenbergRankStructure out;
  out.m_hat = rec.m_hat;
  out.y2 = rec.y2;
  if (j > 1) {
    out.y1 = fact.r()
                 .topLeftCorner((j - 1) * L, (j - 1) * L)
                 .triangularView<Eigen::Upper>()
                 .solve(fact.z_block(j));
  } else {
    out.y1 = Matrix::Zero(0, L);
  }
  return out;
}

Vector angles_vs_constraint_space(const BlockArnoldiState& state,
                                  const GmresFactorization& fact, Index j,
                                  double check_tol) {
  const Index L = fact.block_size();
  const IterationBlocks& rec = fact.blocks(j);
  const CsDecomposition cs = cs_decompose(rec.h_hat);

  // Explicit cross-check from dense orthonormal bases of the previous
  // residual range and the constraint space.
  const Matrix x_prev = gmres_x_at(state, fact, j - 1);
  const Matrix f_prev = state.rhs() - state.op().apply(x_prev);
  const Matrix residual_basis = orthonormal_range(f_prev);
  if (residual_basis.cols() == L) {
    const Matrix constraint_basis =
        thin_orthonormal_q(state.op().apply(state.basis_prefix(j)));
    Vector explicit_cos = principal_angle_cosines(residual_basis, constraint_basis);
    Vector cs_cos = cs.cosines;  // ascending; explicit_cos is descending
    std::sort(explicit_cos.data(), explicit_cos.data() + explicit_cos.size());
    const double deviation = (explicit_cos - cs_cos).cwiseAbs().maxCoeff();
    if (deviation > check_tol) {
      throw std::runtime_error(
          "angles_vs_constraint_space: CS cosines disagree with explicit principal "
          "angles, max deviation " +
          std::to_string(deviation));
    }
  }
  return cs.angles;
}

Vector initial_residual_sines(const GmresFactorization& fact) {
  return Eigen::JacobiSVD<Matrix>(fact.q21_product()).singularValues();
}

}  // namespace blockry
