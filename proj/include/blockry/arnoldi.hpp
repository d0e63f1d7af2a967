// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "blockry/types.hpp"

namespace blockry {

/// Linear operator applied to n x L blocks.
class BlockOperator {
 public:
  virtual ~BlockOperator() = default;
  virtual Index dimension() const = 0;
  virtual void apply(const Matrix& x, Matrix& y) const = 0;

  Matrix apply(const Matrix& x) const {
    Matrix y(x.rows(), x.cols());
    apply(x, y);
    return y;
  }
};

class DenseOperator final : public BlockOperator {
 public:
  using BlockOperator::apply;
  explicit DenseOperator(Matrix a);
  Index dimension() const override { return a_.rows(); }
  void apply(const Matrix& x, Matrix& y) const override;
  const Matrix& matrix() const { return a_; }

 private:
  Matrix a_;
};

/// Compressed sparse row storage built from (row, col, value) triplets;
/// duplicate entries are summed.
class CsrOperator final : public BlockOperator {
 public:
  struct Triplet {
    Index row, col;
    double value;
  };

  using BlockOperator::apply;
  CsrOperator(Index n, std::vector<Triplet> entries);
  Index dimension() const override { return n_; }
  void apply(const Matrix& x, Matrix& y) const override;
  Matrix dense() const;
  Index nonzeros() const { return static_cast<Index>(values_.size()); }

 private:
  Index n_;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

/// diag(first, second) acting on the stacked row ranges.
class BlockDiagonalOperator final : public BlockOperator {
 public:
  using BlockOperator::apply;
  BlockDiagonalOperator(std::shared_ptr<const BlockOperator> first,
                        std::shared_ptr<const BlockOperator> second);
  Index dimension() const override;
  void apply(const Matrix& x, Matrix& y) const override;

 private:
  std::shared_ptr<const BlockOperator> first_;
  std::shared_ptr<const BlockOperator> second_;
};

std::shared_ptr<const BlockOperator> block_diagonal(
    std::shared_ptr<const BlockOperator> first,
    std::shared_ptr<const BlockOperator> second);

struct ArnoldiOptions {
  /// A diagonal of the new block's QR factor counts as zero when it is at most
  /// breakdown_tol_factor * ||A V_j||_F.
  double breakdown_tol_factor = 1e-12;
  std::uint64_t rng_seed = 0x5EED;
};

struct BreakdownEvent {
  Index iteration;                     // step at which dependence appeared
  Index dependent_count;               // p
  std::vector<Index> replaced_columns; // positions within the new block
};

/// Block Arnoldi process: maintains the orthonormal basis W_{j+1}, the block
/// upper Hessenberg matrix, and the relation A W_j = W_{j+1} Hbar_j.
/// Dependent directions in a new block are replaced by random vectors so the
/// block size never shrinks.
class BlockArnoldiState {
 public:
  BlockArnoldiState(const BlockOperator& op, const Matrix& b, const Matrix& x0,
                    ArnoldiOptions options = {});

  /// Runs one block Arnoldi step; returns p, the number of dependent vectors
  /// replaced in this step.
  Index step();

  Index block_size() const { return block_size_; }
  Index iterations() const { return iterations_; }
  Index dimension() const { return op_->dimension(); }
  const BlockOperator& op() const { return *op_; }

  /// W_{j+1}, n x (j+1)L.
  const Matrix& basis() const { return basis_; }
  /// V_i (1-based), n x L.
  Matrix basis_block(Index i) const;
  /// W_j, the leading jL basis columns.
  Matrix basis_prefix(Index j) const;

  /// Hbar_j, (j+1)L x jL.
  const Matrix& hessenberg() const { return hessenberg_; }
  /// j-th block column of Hbar including H_{j+1,j}, (j+1)L x L.
  Matrix hessenberg_column_block(Index j) const;

  const Matrix& s0() const { return s0_; }
  const Matrix& x0() const { return x0_; }
  const Matrix& rhs() const { return b_; }
  const std::vector<BreakdownEvent>& breakdown_log() const { return breakdown_log_; }
  bool had_breakdown_before(Index j) const;
  Index breakdown_p_at(Index j) const;

  /// ||W^T W - I||_F, for invariant checks.
  double orthonormality_defect() const;
  /// ||A W_j - W_{j+1} Hbar_j||_F.
  double relation_residual() const;

 private:
  Matrix random_replacement(Index valid_cols);

  const BlockOperator* op_;
  ArnoldiOptions options_;
  Index block_size_;
  Index iterations_ = 0;
  Matrix b_;
  Matrix x0_;
  Matrix s0_;
  Matrix basis_;
  Matrix hessenberg_;
  std::vector<BreakdownEvent> breakdown_log_;
  std::mt19937_64 rng_;
};

}  // namespace blockry
