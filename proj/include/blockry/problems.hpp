// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "blockry/arnoldi.hpp"
#include "blockry/types.hpp"

namespace blockry {

/// Cyclic shift: A e_i = e_{i+1} for i < n and A e_n = e_1. Stored sparse.
std::shared_ptr<const BlockOperator> shift_matrix(Index n);

/// Parsed Matrix Market content. Coordinate entries are zero-based with
/// duplicates kept as read; symmetric storage has already been expanded.
struct MatrixMarketData {
  Index rows = 0;
  Index cols = 0;
  bool coordinate = true;
  bool symmetric = false;
  std::vector<CsrOperator::Triplet> entries;  // coordinate entries (expanded)
  Matrix dense;                               // array-format payload
};

MatrixMarketData read_matrix_market(std::istream& in);
MatrixMarketData read_matrix_market_file(const std::string& path);

/// Square coordinate/array file as a sparse operator.
std::shared_ptr<const BlockOperator> parse_matrix_market(std::istream& in);
std::shared_ptr<const BlockOperator> parse_matrix_market_file(const std::string& path);

/// Any Matrix Market file as a dense matrix (used for right-hand sides).
Matrix parse_matrix_market_dense(std::istream& in);
Matrix parse_matrix_market_dense_file(const std::string& path);

void write_matrix_market(std::ostream& out, Index rows, Index cols,
                         const std::vector<CsrOperator::Triplet>& entries);

struct ProblemSpec {
  std::shared_ptr<const BlockOperator> op;
  Matrix b;
  Matrix x0;
  std::string label;
  std::vector<std::string> notes;
  /// (iteration, event) annotations for the built-in fixtures.
  std::vector<std::pair<Index, std::string>> expected_events;
};

struct ExperimentOptions {
  std::string data_dir;       // defaults to $BLOCKRY_DATA, then "data"
  std::string matrix_path;    // explicit file for the mixed experiment
  std::uint64_t seed = 0x5EED;
};

/// Built-in experiments: "total-stag" (shift n=200, four unit right-hand
/// sides), "partial-stag" (shift n=30, two unit right-hand sides) and
/// "sherman4-mixed" (block diagonal of a Matrix Market operator and the shift
/// matrix with n=200).
ProblemSpec builtin_experiment(const std::string& name, const ExperimentOptions& options = {});

}  // namespace blockry
