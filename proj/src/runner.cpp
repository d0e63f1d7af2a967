// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#include "blockry/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

namespace blockry {
namespace {

bool is_builtin(const std::string& name) {
  return name == "total-stag" || name == "partial-stag" || name == "sherman4-mixed";
}

ProblemSpec load_problem(const RunConfig& config) {
  if (is_builtin(config.problem)) {
    ExperimentOptions options;
    options.data_dir = config.data_dir;
    options.matrix_path = config.matrix_path;
    options.seed = config.seed;
    return builtin_experiment(config.problem, options);
  }
  ProblemSpec spec;
  spec.op = parse_matrix_market_file(config.problem);
  spec.label = config.problem;
  const Index n = spec.op->dimension();
  if (!config.rhs_path.empty()) {
    spec.b = parse_matrix_market_dense_file(config.rhs_path);
    if (spec.b.rows() != n) {
      throw std::runtime_error("right-hand side dimension does not match the operator");
    }
  } else {
    if (config.block_size < 1) throw contract_error("block size must be at least 1");
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    spec.b.resize(n, config.block_size);
    for (Index j = 0; j < spec.b.cols(); ++j) {
      for (Index i = 0; i < n; ++i) spec.b(i, j) = normal(rng);
    }
    spec.notes.push_back("right-hand sides drawn from a seeded standard normal (seed " +
                         std::to_string(config.seed) + ")");
  }
  spec.x0 = Matrix::Zero(n, spec.b.cols());
  return spec;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.16e", v);
  return buffer;
}

std::string join_indices(const std::vector<Index>& indices) {
  std::string out;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(indices[i] + 1);  // 1-based in reports
  }
  return out;
}

struct SolveSession {
  ProblemSpec spec;
  std::optional<BlockArnoldiState> state;
  std::optional<GmresFactorization> fact;
  RunResult result;
};

void write_artifacts(const RunConfig& config, const SolveSession& session,
                     Index block_size) {
  if (config.out_dir.empty()) return;
  std::filesystem::create_directories(config.out_dir);
  const std::string csv_path = config.out_dir + "/iterations.csv";
  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);
    csv << csv_header(config, block_size) << "\n";
    for (const IterationRecord& rec : session.result.records) {
      csv << csv_row(config, rec) << "\n";
    }
  }
  {
    std::ofstream summary(config.out_dir + "/summary.txt", std::ios::binary);
    const RunResult& r = session.result;
    summary << "problem: " << r.label << "\n";
    summary << "dimension: " << session.spec.op->dimension() << "\n";
    summary << "block size: " << block_size << "\n";
    summary << "iterations: " << r.iterations << "\n";
    summary << "status: " << (r.converged ? "converged" : "budget exhausted") << "\n";
    for (Index c = 0; c < static_cast<Index>(r.convergence_iteration.size()); ++c) {
      summary << "column " << (c + 1) << " converged at: ";
      if (r.convergence_iteration[static_cast<std::size_t>(c)] < 0) {
        summary << "-";
      } else {
        summary << r.convergence_iteration[static_cast<std::size_t>(c)];
      }
      summary << "\n";
    }
    for (const BreakdownEvent& e : r.breakdowns) {
      summary << "breakdown at iteration " << e.iteration << ": p = " << e.dependent_count
              << "\n";
    }
    summary << "max verification residual: " << format_double(r.max_verification_residual)
            << "\n";
    for (const std::string& f : r.verification_failures) {
      summary << "verification failure: " << f << "\n";
    }
    for (const std::string& n : r.notes) summary << "note: " << n << "\n";
  }
  if (config.emit_plot) {
    std::ofstream plot(config.out_dir + "/plot.gp", std::ios::binary);
    plot << "set datafile separator ','\n";
    plot << "set logscale y\n";
    plot << "set xlabel 'iteration'\n";
    plot << "set ylabel 'relative residual norm'\n";
    plot << "set key outside\n";
    plot << "plot ";
    for (Index c = 0; c < block_size; ++c) {
      if (c > 0) plot << ", ";
      plot << "'iterations.csv' using 1:" << (2 + c) << " with lines title 'gmres col "
           << (c + 1) << "'";
    }
    plot << "\n";
    if (config.emit_diagnostics) {
      plot << "pause -1\n";
      plot << "unset logscale y\n";
      plot << "set ylabel 'squared CS sines'\n";
      const Index sine_base = 3 + block_size +
                              (config.emit_fom ? block_size + 1 : 0) + 3;
      plot << "plot ";
      for (Index c = 0; c < block_size; ++c) {
        if (c > 0) plot << ", ";
        plot << "'iterations.csv' using 1:($" << (sine_base + c) << "**2) with lines title 's"
             << (c + 1) << "^2'";
      }
      plot << "\n";
    }
  }
}

SolveSession run_core(const RunConfig& config) {
  SolveSession session;
  session.spec = load_problem(config);
  session.result.label = session.spec.label;
  session.result.notes = session.spec.notes;

  const Index L = session.spec.b.cols();

  ArnoldiOptions arnoldi_options;
  arnoldi_options.rng_seed = config.seed;
  session.state.emplace(*session.spec.op, session.spec.b, session.spec.x0,
                        arnoldi_options);
  session.fact.emplace(session.state->s0(), config.rank_tol_factor);

  Vector denom(L);
  for (Index c = 0; c < L; ++c) {
    const double norm = session.spec.b.col(c).norm();
    denom(c) = norm > 0.0 ? norm : 1.0;
  }
  session.result.convergence_iteration.assign(static_cast<std::size_t>(L), -1);

  const bool want_fom = config.emit_fom || config.emit_diagnostics || config.verify;
  Matrix x_prev = session.state->x0();

  for (Index j = 1; j <= config.max_iterations; ++j) {
    try {
      session.state->step();
    } catch (const std::runtime_error& e) {
      // The basis spans the whole space; no further iteration is possible.
      if (std::string(e.what()) == "operator range exhausted") break;
      throw;
    }
    session.fact->advance(session.state->hessenberg_column_block(j));

    IterationRecord rec;
    rec.j = j;
    rec.breakdown_p = session.state->breakdown_p_at(j);

    IteratePair pair;
    gmres_iterate(*session.state, *session.fact, pair);
    if (want_fom) fom_iterate(*session.state, *session.fact, pair);

    rec.gmres_rel = pair.gmres_residual_norms.cwiseQuotient(denom);
    if (want_fom) {
      rec.fom_rel = pair.fom_residual_norms.cwiseQuotient(denom);
      rec.fom_is_generalized = pair.fom_is_generalized;
    }

    if (config.emit_diagnostics || config.verify) {
      const StagnationReport report = classify(*session.state, *session.fact, j);
      rec.rank_r = report.rank_r;
      rec.classification = report.classification;
      rec.stagnated_columns = report.stagnated_columns;
      rec.sines = report.cs.sines;
      rec.cosines = report.cs.cosines;
      rec.angles = report.cs.angles;
      rec.intersection_dim = report.intersection_dim;
      if (config.verify && !session.state->had_breakdown_before(j) &&
          report.intersection_dim != report.rank_r) {
        session.result.verification_failures.push_back(
            "iteration " + std::to_string(j) + ": intersection dim " +
            std::to_string(report.intersection_dim) + " != rank " +
            std::to_string(report.rank_r));
      }
    }

    if (config.verify) {
      const Vector explicit_norms =
          explicit_residual_norms(*session.spec.op, session.spec.b, pair.x_gmres);
      rec.residual_crosscheck =
          (pair.gmres_residual_norms - explicit_norms).cwiseAbs().maxCoeff() /
          session.spec.b.norm();
      const Index rank = session.fact->blocks(j).structural_rank;
      if (rank == L) {
        if (session.state->had_breakdown_before(j)) {
          rec.gap_residual = verify_breakdown_gap(*session.state, pair, *session.fact);
        } else {
          rec.trig_residual = verify_trig_relation(pair, x_prev, *session.fact);
        }
      }
      angles_vs_constraint_space(*session.state, *session.fact, j);
      for (double v : {rec.residual_crosscheck, rec.trig_residual, rec.gap_residual}) {
        if (!std::isnan(v)) {
          session.result.max_verification_residual =
              std::max(session.result.max_verification_residual, v);
        }
      }
    }

    session.result.records.push_back(std::move(rec));
    session.result.iterations = j;

    bool all_converged = true;
    for (Index c = 0; c < L; ++c) {
      const double rel = session.result.records.back().gmres_rel(c);
      if (rel <= config.tolerance) {
        if (session.result.convergence_iteration[static_cast<std::size_t>(c)] < 0) {
          session.result.convergence_iteration[static_cast<std::size_t>(c)] = j;
        }
      } else {
        all_converged = false;
      }
    }
    x_prev = pair.x_gmres;
    if (all_converged) {
      session.result.converged = true;
      break;
    }
  }
  session.result.breakdowns = session.state->breakdown_log();
  session.result.exit_code = session.result.converged ? 0 : 2;
  return session;
}

Matrix sign_canonical(const Matrix& a) {
  Matrix out = a;
  const double scale = out.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * std::max(scale, 1.0);
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) {
      if (std::abs(out(i, j)) > tol) {
        if (out(i, j) < 0.0) out.row(i) = -out.row(i);
        break;
      }
    }
  }
  for (Index j = 0; j < out.cols(); ++j) {
    for (Index i = 0; i < out.rows(); ++i) {
      if (std::abs(out(i, j)) > tol) {
        if (out(i, j) < 0.0) out.col(j) = -out.col(j);
        break;
      }
    }
  }
  return out;
}

void print_matrix(std::ostringstream& out, const std::string& name, const Matrix& a) {
  out << name << " =\n";
  char buffer[48];
  for (Index i = 0; i < a.rows(); ++i) {
    out << " ";
    for (Index j = 0; j < a.cols(); ++j) {
      std::snprintf(buffer, sizeof(buffer), " % -25.17g", a(i, j));
      out << buffer;
    }
    out << "\n";
  }
}

}  // namespace

std::string csv_header(const RunConfig& config, Index block_size) {
  std::string header = "j";
  for (Index c = 0; c < block_size; ++c) header += ",gmres_rel_" + std::to_string(c + 1);
  header += ",breakdown_p";
  if (config.emit_fom) {
    for (Index c = 0; c < block_size; ++c) header += ",fom_rel_" + std::to_string(c + 1);
    header += ",fom_generalized";
  }
  if (config.emit_diagnostics) {
    header += ",rank_r,case,stagnated_columns";
    for (Index c = 0; c < block_size; ++c) header += ",sine_" + std::to_string(c + 1);
    for (Index c = 0; c < block_size; ++c) header += ",cosine_" + std::to_string(c + 1);
    for (Index c = 0; c < block_size; ++c) header += ",angle_" + std::to_string(c + 1);
  }
  if (config.verify) {
    header += ",trig_residual,gap_residual,residual_crosscheck";
  }
  return header;
}

std::string csv_row(const RunConfig& config, const IterationRecord& rec) {
  std::string row = std::to_string(rec.j);
  for (Index c = 0; c < rec.gmres_rel.size(); ++c) {
    row += "," + format_double(rec.gmres_rel(c));
  }
  row += "," + std::to_string(rec.breakdown_p);
  if (config.emit_fom) {
    for (Index c = 0; c < rec.fom_rel.size(); ++c) {
      row += "," + format_double(rec.fom_rel(c));
    }
    row += rec.fom_is_generalized ? ",1" : ",0";
  }
  if (config.emit_diagnostics) {
    row += "," + std::to_string(rec.rank_r);
    row += ",";
    row += to_string(rec.classification);
    row += "," + join_indices(rec.stagnated_columns);
    for (Index c = 0; c < rec.sines.size(); ++c) row += "," + format_double(rec.sines(c));
    for (Index c = 0; c < rec.cosines.size(); ++c) {
      row += "," + format_double(rec.cosines(c));
    }
    for (Index c = 0; c < rec.angles.size(); ++c) {
      row += "," + format_double(rec.angles(c));
    }
  }
  if (config.verify) {
    row += "," + format_double(rec.trig_residual);
    row += "," + format_double(rec.gap_residual);
    row += "," + format_double(rec.residual_crosscheck);
  }
  return row;
}

RunResult run(const RunConfig& config) {
  if (config.max_iterations < 1) {
    RunResult bad;
    bad.exit_code = 1;
    bad.error = "max_iterations must be at least 1";
    return bad;
  }
  if (config.tolerance <= 0.0) {
    RunResult bad;
    bad.exit_code = 1;
    bad.error = "tolerance must be positive";
    return bad;
  }
  try {
    SolveSession session = run_core(config);
    write_artifacts(config, session, session.spec.b.cols());
    return std::move(session.result);
  } catch (const std::exception& e) {
    RunResult bad;
    bad.exit_code = 1;
    bad.error = e.what();
    return bad;
  }
}

std::string inspect_report(const RunConfig& config, Index at) {
  if (at < 1) throw contract_error("inspect: iteration must be at least 1");
  RunConfig quiet = config;
  quiet.out_dir.clear();
  quiet.verify = false;
  quiet.emit_diagnostics = false;
  SolveSession session = run_core(quiet);
  if (at > session.fact->iterations()) {
    throw std::runtime_error("inspect: iteration " + std::to_string(at) +
                             " beyond run length " +
                             std::to_string(session.fact->iterations()));
  }
  const IterationBlocks& rec = session.fact->blocks(at);
  std::ostringstream out;
  out << "problem: " << session.result.label << ", iteration " << at << "\n";
  print_matrix(out, "Ctilde", rec.c_tilde);
  print_matrix(out, "Ctilde (sign-canonical)", sign_canonical(rec.c_tilde));
  print_matrix(out, "C", rec.c);
  print_matrix(out, "C (sign-canonical)", sign_canonical(rec.c));
  print_matrix(out, "Chat", rec.c_hat);
  print_matrix(out, "Chat (sign-canonical)", sign_canonical(rec.c_hat));
  print_matrix(out, "N", rec.n);
  print_matrix(out, "N (sign-canonical)", sign_canonical(rec.n));
  print_matrix(out, "Nhat", rec.n_hat);
  print_matrix(out, "Nhat (sign-canonical)", sign_canonical(rec.n_hat));
  return out.str();
}

}  // namespace blockry
