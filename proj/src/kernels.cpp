// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#include "blockry/kernels.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace blockry {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Orthogonal polar factor, used to align near-degenerate CS clusters.
Matrix polar_orthogonal(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return dec.matrixU() * dec.matrixV().transpose();
}

}  // namespace

QrFactors householder_qr(const Matrix& a) {
  if (a.rows() < a.cols() || a.cols() < 1) {
    throw contract_error("householder_qr: need m >= n >= 1");
  }
  require_finite(a, "householder_qr");
  Eigen::HouseholderQR<Matrix> qr(a);
  QrFactors out;
  out.q = qr.householderQ() * Matrix::Identity(a.rows(), a.rows());
  out.r = qr.matrixQR().triangularView<Eigen::Upper>();
  return out;
}

SvdFactors svd(const Matrix& a) {
  require_finite(a, "svd");
  Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdFactors{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

Index numerical_rank(const Matrix& a, double tol_factor, double scale) {
  if (tol_factor <= 0.0) {
    throw contract_error("numerical_rank: tol_factor must be positive");
  }
  if (a.size() == 0) return 0;
  const Vector sigma = Eigen::JacobiSVD<Matrix>(a).singularValues();
  const double reference = std::max(sigma(0), scale);
  if (reference == 0.0) return 0;
  const double threshold =
      tol_factor * static_cast<double>(std::max(a.rows(), a.cols())) * kEps * reference;
  Index rank = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > threshold) ++rank;
  }
  return rank;
}

Matrix pinv_structured_upper(const Matrix& n_hat, double tol_factor) {
  if (n_hat.rows() != n_hat.cols() || n_hat.rows() < 1) {
    throw contract_error("pinv_structured_upper: input must be square");
  }
  require_finite(n_hat, "pinv_structured_upper");
  const Index L = n_hat.rows();
  const double scale = n_hat.cwiseAbs().maxCoeff();
  const double tiny = tol_factor * static_cast<double>(L) * kEps * std::max(scale, 1.0);
  for (Index i = 1; i < L; ++i) {
    for (Index j = 0; j < i; ++j) {
      if (std::abs(n_hat(i, j)) > tiny) {
        throw contract_error("pinv_structured_upper: input is not upper triangular");
      }
    }
  }
  // Trailing zero rows determine the structural rank r.
  const double row_tol = tol_factor * static_cast<double>(L) * kEps * std::max(scale, 0.0);
  Index r = L;
  while (r > 0 && n_hat.row(r - 1).norm() <= row_tol) --r;
  Matrix pinv = Matrix::Zero(L, L);
  if (r == 0) return pinv;
  // Y2 has full row rank by construction; its pseudo-inverse is computed from
  // the SVD so that a violated precondition still yields a valid pinv.
  const Matrix y2 = n_hat.topRows(r);
  Eigen::JacobiSVD<Matrix> dec(y2, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sigma = dec.singularValues();
  const double threshold =
      tol_factor * static_cast<double>(L) * kEps * (sigma.size() > 0 ? sigma(0) : 0.0);
  Matrix sigma_pinv = Matrix::Zero(sigma.size(), sigma.size());
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > threshold) sigma_pinv(i, i) = 1.0 / sigma(i);
  }
  pinv.leftCols(r) = dec.matrixV() * sigma_pinv * dec.matrixU().transpose();
  return pinv;
}

EchelonQr echelon_qr(const Matrix& a, double zero_tol, bool full_q) {
  require_finite(a, "echelon_qr");
  if (zero_tol < 0.0) {
    throw contract_error("echelon_qr: zero_tol must be nonnegative");
  }
  const Index m = a.rows();
  const Index n = a.cols();
  EchelonQr out;
  out.r = a;
  // Reflectors are stored as (pivot row, v) and materialized at the end.
  std::vector<std::pair<Index, Vector>> reflectors;
  Index k = 0;
  for (Index col = 0; col < n; ++col) {
    if (k >= m) {
      out.dependent_columns.push_back(col);
      continue;
    }
    Vector seg = out.r.col(col).segment(k, m - k);
    const double norm = seg.norm();
    if (norm <= zero_tol) {
      out.r.col(col).segment(k, m - k).setZero();
      out.dependent_columns.push_back(col);
      continue;
    }
    const double alpha = seg(0) >= 0.0 ? -norm : norm;
    Vector v = seg;
    v(0) -= alpha;
    const double vsq = v.squaredNorm();
    if (vsq > 0.0) {
      for (Index c = col; c < n; ++c) {
        auto column = out.r.col(c).segment(k, m - k);
        const double coeff = 2.0 * v.dot(column) / vsq;
        column -= coeff * v;
      }
      reflectors.emplace_back(k, v / std::sqrt(vsq));
    }
    out.r(k, col) = alpha;
    if (k + 1 < m) out.r.col(col).segment(k + 1, m - k - 1).setZero();
    ++k;
  }
  out.rank = k;
  const Index qcols = full_q ? m : out.rank;
  out.q = Matrix::Identity(m, qcols);
  // q = H_1 H_2 ... H_t applied to the identity, reflectors in reverse order.
  for (auto it = reflectors.rbegin(); it != reflectors.rend(); ++it) {
    const Index row = it->first;
    const Vector& v = it->second;
    auto block = out.q.bottomRows(m - row);
    block -= 2.0 * v * (v.transpose() * block);
  }
  return out;
}

CsDecomposition cs_decompose(const Matrix& h_block) {
  const Index m = h_block.rows();
  if (m != h_block.cols() || m < 2 || m % 2 != 0) {
    throw contract_error("cs_decompose: input must be square with even dimension");
  }
  require_finite(h_block, "cs_decompose");
  const double orth_defect =
      (h_block.transpose() * h_block - Matrix::Identity(m, m)).norm();
  if (orth_defect > 1e-8) {
    throw contract_error("cs_decompose: input not orthogonal, ||H^T H - I||_F = " +
                         std::to_string(orth_defect));
  }
  const Index L = m / 2;
  const Matrix q11 = h_block.topLeftCorner(L, L);
  const Matrix q12 = h_block.topRightCorner(L, L);
  const Matrix q21 = h_block.bottomLeftCorner(L, L);
  const Matrix q22 = h_block.bottomRightCorner(L, L);

  CsDecomposition cs;
  Eigen::JacobiSVD<Matrix> dec11(q11, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Reverse the SVD ordering so cosines ascend.
  cs.u1 = dec11.matrixU().rowwise().reverse();
  cs.v1 = dec11.matrixV().rowwise().reverse();
  cs.cosines = dec11.singularValues().reverse();
  for (Index i = 0; i < L; ++i) cs.cosines(i) = std::clamp(cs.cosines(i), 0.0, 1.0);

  // Sines paired column-wise through Q21 V1; accurate at both ends of [0,1].
  const Matrix t = q21 * cs.v1;
  const Matrix t2 = q12.transpose() * cs.u1;
  cs.sines.resize(L);
  for (Index i = 0; i < L; ++i) cs.sines(i) = std::min(t.col(i).norm(), 1.0);

  // Large sines: U2/V2 columns read off Q21 V1 and Q12^T U1 directly.
  // Small sines: the directions are ill-determined there, so take the
  // orthogonal complement of the settled columns and align it to the residual
  // Q21 V1 data with an orthogonal Procrustes fit; V2 then follows from Q22.
  constexpr double tau = 1e-3;
  std::vector<Index> big, small;
  for (Index i = 0; i < L; ++i) (cs.sines(i) >= tau ? big : small).push_back(i);

  cs.u2 = Matrix::Zero(L, L);
  cs.v2 = Matrix::Zero(L, L);
  for (Index i : big) {
    cs.u2.col(i) = t.col(i) / cs.sines(i);
    cs.v2.col(i) = t2.col(i) / cs.sines(i);
  }
  if (!small.empty()) {
    const Index nb = static_cast<Index>(big.size());
    const Index ns = static_cast<Index>(small.size());
    Matrix complement;
    if (nb == 0) {
      complement = Matrix::Identity(L, L);
    } else {
      // Complete the settled columns to a full orthonormal basis.
      Matrix settled(L, nb);
      for (Index b = 0; b < nb; ++b) settled.col(b) = cs.u2.col(big[b]);
      Matrix qfull = Eigen::HouseholderQR<Matrix>(settled).householderQ() *
                     Matrix::Identity(L, L);
      complement = qfull.rightCols(ns);
    }
    Matrix t_small(L, ns);
    for (Index sidx = 0; sidx < ns; ++sidx) t_small.col(sidx) = t.col(small[sidx]);
    const Matrix fit = complement.transpose() * t_small;
    Matrix w = Matrix::Identity(ns, ns);
    if (fit.norm() > 64.0 * kEps * static_cast<double>(L)) w = polar_orthogonal(fit);
    const Matrix u2_small = complement * w;
    for (Index sidx = 0; sidx < ns; ++sidx) {
      const Index i = small[sidx];
      cs.u2.col(i) = u2_small.col(sidx);
      cs.v2.col(i) = -q22.transpose() * cs.u2.col(i) / cs.cosines(i);
    }
  }

  cs.angles.resize(L);
  for (Index i = 0; i < L; ++i) cs.angles(i) = std::atan2(cs.sines(i), cs.cosines(i));
  return cs;
}

Vector principal_angle_cosines(const Matrix& basis_u, const Matrix& basis_v) {
  require_finite(basis_u, "principal_angles");
  require_finite(basis_v, "principal_angles");
  const auto check = [](const Matrix& b, const char* name) {
    if (b.cols() == 0) return;
    const double defect =
        (b.transpose() * b - Matrix::Identity(b.cols(), b.cols())).norm();
    if (defect > 1e-8) {
      throw contract_error(std::string("principal_angles: ") + name +
                           " not orthonormal, defect " + std::to_string(defect));
    }
  };
  check(basis_u, "basis_u");
  check(basis_v, "basis_v");
  if (basis_u.rows() != basis_v.rows()) {
    throw contract_error("principal_angles: bases must share the ambient dimension");
  }
  if (basis_u.cols() == 0 || basis_v.cols() == 0) return Vector(0);
  Vector cos = Eigen::JacobiSVD<Matrix>(basis_u.transpose() * basis_v).singularValues();
  for (Index i = 0; i < cos.size(); ++i) cos(i) = std::clamp(cos(i), 0.0, 1.0);
  return cos;
}

Vector principal_angles(const Matrix& basis_u, const Matrix& basis_v) {
  Vector cos = principal_angle_cosines(basis_u, basis_v);
  Vector angles(cos.size());
  for (Index i = 0; i < cos.size(); ++i) angles(i) = std::acos(cos(i));
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

bool sign_equivalent(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const Index m = a.rows();
  const Index n = a.cols();
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  const double significant = 100.0 * tol * scale;
  // Propagate row/column signs through entries that are significant in both
  // matrices; unconstrained signs default to +1. The final residual check
  // decides.
  std::vector<int> row_sign(m, 0), col_sign(n, 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (std::abs(a(i, j)) <= significant || std::abs(b(i, j)) <= significant) continue;
        const int s = (a(i, j) * b(i, j) > 0.0) ? 1 : -1;
        if (row_sign[i] != 0 && col_sign[j] == 0) {
          col_sign[j] = s * row_sign[i];
          changed = true;
        } else if (row_sign[i] == 0 && col_sign[j] != 0) {
          row_sign[i] = s * col_sign[j];
          changed = true;
        } else if (row_sign[i] == 0 && col_sign[j] == 0) {
          row_sign[i] = 1;
          col_sign[j] = s;
          changed = true;
        }
      }
    }
  }
  Matrix adjusted = b;
  for (Index i = 0; i < m; ++i) {
    if (row_sign[i] == -1) adjusted.row(i) = -adjusted.row(i);
  }
  for (Index j = 0; j < n; ++j) {
    if (col_sign[j] == -1) adjusted.col(j) = -adjusted.col(j);
  }
  return (adjusted - a).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix orthonormal_range(const Matrix& a, double tol_factor, double scale) {
  if (a.size() == 0) return Matrix(a.rows(), 0);
  Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeThinU);
  const Vector sigma = dec.singularValues();
  const double reference = std::max(sigma.size() > 0 ? sigma(0) : 0.0, scale);
  const double threshold =
      tol_factor * static_cast<double>(std::max(a.rows(), a.cols())) * kEps * reference;
  Index rank = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > threshold) ++rank;
  }
  return dec.matrixU().leftCols(rank);
}

}  // namespace blockry
