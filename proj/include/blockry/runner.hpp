// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "blockry/diagnostics.hpp"
#include "blockry/problems.hpp"
#include "blockry/solvers.hpp"

namespace blockry {

struct RunConfig {
  std::string problem;       // builtin name or Matrix Market path
  std::string rhs_path;      // right-hand sides for file problems
  std::string matrix_path;   // override for the mixed experiment
  std::string data_dir;      // defaults to $BLOCKRY_DATA, then "data"
  Index block_size = 2;      // used when no rhs file is given
  Index max_iterations = 100;
  double tolerance = 1e-10;  // max per-column relative residual
  std::uint64_t seed = 0x5EED;
  std::string out_dir;       // artifacts are written only when set
  bool emit_fom = false;
  bool emit_diagnostics = false;
  bool verify = false;
  bool emit_plot = false;
  double rank_tol_factor = 1.0;
};

struct IterationRecord {
  Index j = 0;
  Vector gmres_rel;
  Index breakdown_p = 0;
  Vector fom_rel;  // empty unless the FOM iterate was computed
  bool fom_is_generalized = false;
  Index rank_r = -1;
  StagnationCase classification = StagnationCase::FomExists;
  std::vector<Index> stagnated_columns;
  Vector sines, cosines, angles;
  double trig_residual = std::numeric_limits<double>::quiet_NaN();
  double gap_residual = std::numeric_limits<double>::quiet_NaN();
  double residual_crosscheck = std::numeric_limits<double>::quiet_NaN();
  Index intersection_dim = -1;
};

struct RunResult {
  int exit_code = 1;
  bool converged = false;
  Index iterations = 0;
  std::string label;
  std::vector<IterationRecord> records;
  std::vector<BreakdownEvent> breakdowns;
  std::vector<Index> convergence_iteration;  // per column, -1 when not reached
  double max_verification_residual = 0.0;
  std::vector<std::string> verification_failures;
  std::vector<std::string> notes;
  std::string error;
};

/// Runs a solve and, when an output directory is configured, writes
/// iterations.csv, summary.txt and optionally plot.gp. Exit code 0 on
/// convergence within budget, 2 on budget exhaustion, 1 on error.
RunResult run(const RunConfig& config);

/// Formats the C-matrices and triangular blocks of iteration `at` to full
/// precision, together with their sign-canonical forms.
std::string inspect_report(const RunConfig& config, Index at);

std::string csv_header(const RunConfig& config, Index block_size);
std::string csv_row(const RunConfig& config, const IterationRecord& record);

}  // namespace blockry
