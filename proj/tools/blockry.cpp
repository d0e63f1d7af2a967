// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "blockry/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"block Krylov solver with stagnation diagnostics"};
  app.require_subcommand(1);

  blockry::RunConfig config;
  if (const char* env = std::getenv("BLOCKRY_DATA")) config.data_dir = env;

  long long max_iter = 100;
  long long block_size = 2;
  long long at = 1;
  unsigned long long seed = 0x5EED;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("problem", config.problem,
                    "builtin problem (total-stag | partial-stag | sherman4-mixed) or a "
                    "Matrix Market file")
        ->required();
    cmd->add_option("--rhs", config.rhs_path, "right-hand-side Matrix Market file");
    cmd->add_option("--matrix", config.matrix_path,
                    "matrix file for the sherman4-mixed experiment");
    cmd->add_option("--data", config.data_dir, "matrix data directory");
    cmd->add_option("--block-size", block_size, "number of right-hand sides L");
    cmd->add_option("--max-iter", max_iter, "iteration budget");
    cmd->add_option("--tol", config.tolerance, "relative per-column residual tolerance");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--rank-tol", config.rank_tol_factor,
                    "numerical rank tolerance factor");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "solve and emit per-iteration records");
  add_common(run_cmd);
  run_cmd->add_option("--out", config.out_dir, "output directory for artifacts");
  run_cmd->add_flag("--emit-fom", config.emit_fom, "record block FOM residuals");
  run_cmd->add_flag("--diagnostics", config.emit_diagnostics,
                    "record stagnation diagnostics");
  run_cmd->add_flag("--verify", config.verify, "run internal identity cross-checks");
  run_cmd->add_flag("--plot", config.emit_plot, "emit a gnuplot script");

  CLI::App* inspect_cmd =
      app.add_subcommand("inspect", "print the C-matrices of one iteration");
  add_common(inspect_cmd);
  inspect_cmd->add_option("--at", at, "iteration to inspect")->required();

  CLI11_PARSE(app, argc, argv);

  config.max_iterations = static_cast<blockry::Index>(max_iter);
  config.block_size = static_cast<blockry::Index>(block_size);
  config.seed = seed;

  if (run_cmd->parsed()) {
    const blockry::RunResult result = blockry::run(config);
    if (result.exit_code == 1) {
      std::cerr << "error: " << result.error << "\n";
      return 1;
    }
    std::cout << "problem: " << result.label << "\n";
    std::cout << "iterations: " << result.iterations << "\n";
    std::cout << (result.converged ? "converged" : "iteration budget exhausted") << "\n";
    for (std::size_t c = 0; c < result.convergence_iteration.size(); ++c) {
      std::cout << "column " << (c + 1) << " converged at: ";
      if (result.convergence_iteration[c] < 0) {
        std::cout << "-";
      } else {
        std::cout << result.convergence_iteration[c];
      }
      std::cout << "\n";
    }
    for (const auto& e : result.breakdowns) {
      std::cout << "breakdown at iteration " << e.iteration << " (p = " << e.dependent_count
                << ")\n";
    }
    if (config.verify) {
      std::cout << "max verification residual: " << result.max_verification_residual
                << "\n";
      for (const auto& f : result.verification_failures) {
        std::cout << "verification failure: " << f << "\n";
      }
    }
    return result.exit_code;
  }

  try {
    std::cout << blockry::inspect_report(config, static_cast<blockry::Index>(at));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
