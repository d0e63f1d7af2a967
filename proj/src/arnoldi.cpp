// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#include "blockry/arnoldi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blockry/kernels.hpp"

namespace blockry {

DenseOperator::DenseOperator(Matrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols() || a_.rows() < 1) {
    throw contract_error("DenseOperator: matrix must be square");
  }
  require_finite(a_, "DenseOperator");
}

void DenseOperator::apply(const Matrix& x, Matrix& y) const { y = a_ * x; }

CsrOperator::CsrOperator(Index n, std::vector<Triplet> entries) : n_(n) {
  if (n < 1) throw contract_error("CsrOperator: dimension must be positive");
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n) {
      throw contract_error("CsrOperator: entry out of range");
    }
    if (!std::isfinite(t.value)) {
      throw contract_error("CsrOperator: entries must be finite");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t k = i + 1;
    double sum = entries[i].value;
    while (k < entries.size() && entries[k].row == entries[i].row &&
           entries[k].col == entries[i].col) {
      sum += entries[k].value;  // duplicates are summed
      ++k;
    }
    col_idx_.push_back(entries[i].col);
    values_.push_back(sum);
    ++row_ptr_[static_cast<std::size_t>(entries[i].row) + 1];
    i = k;
  }
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
}

void CsrOperator::apply(const Matrix& x, Matrix& y) const {
  y.setZero(x.rows(), x.cols());
  for (Index row = 0; row < n_; ++row) {
    for (Index k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) {
      y.row(row) += values_[k] * x.row(col_idx_[k]);
    }
  }
}

Matrix CsrOperator::dense() const {
  Matrix a = Matrix::Zero(n_, n_);
  for (Index row = 0; row < n_; ++row) {
    for (Index k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) {
      a(row, col_idx_[k]) += values_[k];
    }
  }
  return a;
}

BlockDiagonalOperator::BlockDiagonalOperator(std::shared_ptr<const BlockOperator> first,
                                             std::shared_ptr<const BlockOperator> second)
    : first_(std::move(first)), second_(std::move(second)) {
  if (!first_ || !second_) {
    throw contract_error("BlockDiagonalOperator: both blocks are required");
  }
}

Index BlockDiagonalOperator::dimension() const {
  return first_->dimension() + second_->dimension();
}

void BlockDiagonalOperator::apply(const Matrix& x, Matrix& y) const {
  const Index n1 = first_->dimension();
  const Index n2 = second_->dimension();
  y.resize(x.rows(), x.cols());
  Matrix top(n1, x.cols()), bottom(n2, x.cols());
  first_->apply(x.topRows(n1), top);
  second_->apply(x.bottomRows(n2), bottom);
  y.topRows(n1) = top;
  y.bottomRows(n2) = bottom;
}

std::shared_ptr<const BlockOperator> block_diagonal(
    std::shared_ptr<const BlockOperator> first,
    std::shared_ptr<const BlockOperator> second) {
  return std::make_shared<BlockDiagonalOperator>(std::move(first), std::move(second));
}

BlockArnoldiState::BlockArnoldiState(const BlockOperator& op, const Matrix& b,
                                     const Matrix& x0, ArnoldiOptions options)
    : op_(&op),
      options_(options),
      block_size_(b.cols()),
      b_(b),
      x0_(x0),
      rng_(options.rng_seed) {
  const Index n = op.dimension();
  if (b.rows() != n || b.cols() < 1) {
    throw contract_error("initialize: rhs block does not match operator dimension");
  }
  if (x0.rows() != n || x0.cols() != b.cols()) {
    throw contract_error("initialize: x0 must have the shape of the rhs block");
  }
  require_finite(b_, "initialize");
  require_finite(x0_, "initialize");

  const Matrix f0 = b_ - op_->apply(x0_);
  EchelonQr qr = echelon_qr(f0, 1e-12 * f0.norm(), /*full_q=*/false);
  if (qr.rank < block_size_) {
    throw std::runtime_error("initial block residual rank-deficient");
  }
  basis_ = qr.q;
  s0_ = qr.r.topRows(block_size_);
  hessenberg_.resize(block_size_, 0);
}

Matrix BlockArnoldiState::basis_block(Index i) const {
  if (i < 1 || i > iterations_ + 1) throw contract_error("basis_block: index out of range");
  const Index start = (i - 1) * block_size_;
  // The newest block may be short when the basis filled the whole space and
  // no replacement directions were left.
  const Index count = std::min(block_size_, basis_.cols() - start);
  return basis_.middleCols(start, count);
}

Matrix BlockArnoldiState::basis_prefix(Index j) const {
  if (j < 0 || j > iterations_ + 1) throw contract_error("basis_prefix: index out of range");
  return basis_.leftCols(j * block_size_);
}

Matrix BlockArnoldiState::hessenberg_column_block(Index j) const {
  if (j < 1 || j > iterations_) {
    throw contract_error("hessenberg_column_block: index out of range");
  }
  return hessenberg_.block(0, (j - 1) * block_size_, (j + 1) * block_size_, block_size_);
}

bool BlockArnoldiState::had_breakdown_before(Index j) const {
  for (const BreakdownEvent& e : breakdown_log_) {
    if (e.iteration < j) return true;
  }
  return false;
}

Index BlockArnoldiState::breakdown_p_at(Index j) const {
  for (const BreakdownEvent& e : breakdown_log_) {
    if (e.iteration == j) return e.dependent_count;
  }
  return 0;
}

Matrix BlockArnoldiState::random_replacement(Index valid_cols) {
  const Index n = op_->dimension();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 3; ++attempt) {
    Vector z(n);
    for (Index i = 0; i < n; ++i) z(i) = normal(rng_);
    const double original = z.norm();
    const auto w = basis_.leftCols(valid_cols);
    for (int pass = 0; pass < 2; ++pass) {
      z -= w * (w.transpose() * z);
    }
    if (z.norm() > 1e-6 * original) return z / z.norm();
  }
  throw std::runtime_error("operator range exhausted");
}

Index BlockArnoldiState::step() {
  const Index L = block_size_;
  const Index j = iterations_ + 1;
  const Index n = op_->dimension();
  if (basis_.cols() < j * L) {
    throw std::runtime_error("operator range exhausted");
  }

  const Matrix av = op_->apply(basis_.middleCols((j - 1) * L, L));
  const double scale = av.norm();

  Matrix column = Matrix::Zero((j + 1) * L, L);
  Matrix u = av;
  // Block modified Gram-Schmidt with one reorthogonalization pass.
  for (int pass = 0; pass < 2; ++pass) {
    for (Index i = 0; i < j; ++i) {
      const auto vi = basis_.middleCols(i * L, L);
      const Matrix h = vi.transpose() * u;
      u -= vi * h;
      column.block(i * L, 0, L, L) += h;
    }
  }

  EchelonQr qr = echelon_qr(u, options_.breakdown_tol_factor * scale, /*full_q=*/false);
  const Index p = L - qr.rank;
  column.block(j * L, 0, L, L) = qr.r.topRows(L);

  // Replacements keep the block size at L; when the basis has filled the
  // whole space the terminal block stays short, which is consistent with the
  // zero rows of H_{j+1,j}.
  const Index available = n - (j * L + qr.rank);
  const Index replacements = std::min(p, available);
  basis_.conservativeResize(Eigen::NoChange, j * L + qr.rank + replacements);
  basis_.middleCols(j * L, qr.rank) = qr.q;
  if (p > 0) {
    BreakdownEvent event;
    event.iteration = j;
    event.dependent_count = p;
    for (Index t = 0; t < replacements; ++t) {
      basis_.col(j * L + qr.rank + t) = random_replacement(j * L + qr.rank + t);
      event.replaced_columns.push_back(qr.rank + t);
    }
    breakdown_log_.push_back(std::move(event));
  }

  hessenberg_.conservativeResize((j + 1) * L, j * L);
  if (j > 1) hessenberg_.block(j * L, 0, L, (j - 1) * L).setZero();
  hessenberg_.rightCols(L) = column;
  iterations_ = j;
  return p;
}

double BlockArnoldiState::orthonormality_defect() const {
  const Index cols = basis_.cols();
  return (basis_.transpose() * basis_ - Matrix::Identity(cols, cols)).norm();
}

double BlockArnoldiState::relation_residual() const {
  if (iterations_ == 0) return 0.0;
  const Matrix w_j = basis_prefix(iterations_);
  // Rows of the Hessenberg beyond the stored basis columns are zero.
  return (op_->apply(w_j) - basis_ * hessenberg_.topRows(basis_.cols())).norm();
}

}  // namespace blockry
