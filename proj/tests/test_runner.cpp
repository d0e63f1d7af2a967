// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <thread>
#include <fstream>
#include <sstream>

#include "blockry/runner.hpp"

using namespace blockry;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("run: partial-stag converges and logs the breakdown") {
  RunConfig config;
  config.problem = "partial-stag";
  config.max_iterations = 30;
  config.emit_fom = true;
  config.emit_diagnostics = true;
  const RunResult result = run(config);
  REQUIRE(result.exit_code == 0);
  CHECK(result.converged);
  REQUIRE(!result.breakdowns.empty());
  CHECK(result.breakdowns.front().dependent_count == 1);
  // Column 1 converges at the breakdown iteration; column 2 well before 23.
  CHECK(result.convergence_iteration[0] == result.breakdowns.front().iteration);
  CHECK(result.convergence_iteration[1] <= 23);
  CHECK(result.records.size() == static_cast<std::size_t>(result.iterations));
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    CHECK(result.records[i].j == static_cast<Index>(i + 1));
  }
}

TEST_CASE("run: budget exhaustion returns exit code 2") {
  RunConfig config;
  config.problem = "total-stag";
  config.max_iterations = 10;
  const RunResult result = run(config);
  CHECK(result.exit_code == 2);
  CHECK(!result.converged);
}

TEST_CASE("run: unreadable input returns exit code 1") {
  RunConfig config;
  config.problem = "/nonexistent/matrix.mtx";
  const RunResult result = run(config);
  CHECK(result.exit_code == 1);
  CHECK(!result.error.empty());
}

TEST_CASE("run: invalid flags return exit code 1") {
  RunConfig config;
  config.problem = "partial-stag";
  config.max_iterations = 0;
  CHECK(run(config).exit_code == 1);
  config.max_iterations = 5;
  config.tolerance = -1.0;
  CHECK(run(config).exit_code == 1);
}

TEST_CASE("run writes deterministic artifacts") {
  const std::string dir1 = "build/test-artifacts/run1";
  const std::string dir2 = "build/test-artifacts/run2";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);

  RunConfig config;
  config.problem = "partial-stag";
  config.max_iterations = 30;
  config.emit_fom = true;
  config.emit_diagnostics = true;
  config.verify = true;
  config.emit_plot = true;
  config.out_dir = dir1;
  const RunResult first = run(config);
  REQUIRE(first.exit_code == 0);
  config.out_dir = dir2;
  const RunResult second = run(config);
  REQUIRE(second.exit_code == 0);

  const std::string csv1 = slurp(dir1 + "/iterations.csv");
  const std::string csv2 = slurp(dir2 + "/iterations.csv");
  CHECK(csv1 == csv2);  // byte-identical reruns
  CHECK(!csv1.empty());
  CHECK(std::filesystem::exists(dir1 + "/summary.txt"));
  CHECK(std::filesystem::exists(dir1 + "/plot.gp"));

  // Header matches the documented layout for these flags.
  std::istringstream csv(csv1);
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "j,gmres_rel_1,gmres_rel_2,breakdown_p,fom_rel_1,fom_rel_2,fom_generalized,"
        "rank_r,case,stagnated_columns,sine_1,sine_2,cosine_1,cosine_2,angle_1,angle_2,"
        "trig_residual,gap_residual,residual_crosscheck");
  std::string row;
  std::size_t rows = 0;
  while (std::getline(csv, row)) {
    if (!row.empty()) ++rows;
  }
  CHECK(rows == static_cast<std::size_t>(first.iterations));

  const std::string summary = slurp(dir1 + "/summary.txt");
  CHECK(summary.find("breakdown at iteration") != std::string::npos);
  CHECK(summary.find("converged") != std::string::npos);
}

TEST_CASE("run --verify keeps identity residuals small on the shift problems") {
  RunConfig config;
  config.problem = "total-stag";
  config.max_iterations = 60;
  config.emit_fom = true;
  config.emit_diagnostics = true;
  config.verify = true;
  const RunResult result = run(config);
  REQUIRE(result.exit_code == 0);
  CHECK(result.max_verification_residual <= 1e-8);
  CHECK(result.verification_failures.empty());
}

TEST_CASE("inspect prints the C-matrices at the requested iteration") {
  RunConfig config;
  config.problem = "partial-stag";
  config.max_iterations = 30;
  const std::string report = inspect_report(config, 5);
  CHECK(report.find("Ctilde") != std::string::npos);
  CHECK(report.find("Nhat") != std::string::npos);
  CHECK(report.find("sign-canonical") != std::string::npos);
  CHECK_THROWS_AS(inspect_report(config, 500), std::runtime_error);
}

TEST_CASE("concurrent solves are independent and reproduce the serial run") {
  auto solve = []() {
    RunConfig config;
    config.problem = "partial-stag";
    config.max_iterations = 30;
    config.emit_fom = true;
    config.emit_diagnostics = true;
    return run(config);
  };
  const RunResult serial = solve();
  REQUIRE(serial.exit_code == 0);

  std::vector<RunResult> results(4);
  {
    std::vector<std::thread> workers;
    workers.reserve(results.size());
    for (std::size_t t = 0; t < results.size(); ++t) {
      workers.emplace_back([&results, t, &solve] { results[t] = solve(); });
    }
    for (std::thread& w : workers) w.join();
  }
  for (const RunResult& r : results) {
    CHECK(r.exit_code == 0);
    REQUIRE(r.records.size() == serial.records.size());
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      CHECK((r.records[i].gmres_rel - serial.records[i].gmres_rel).norm() == 0.0);
      CHECK((r.records[i].sines - serial.records[i].sines).norm() == 0.0);
    }
  }
}

TEST_CASE("run on a matrix market file with a generated block right-hand side") {
  RunConfig config;
  config.problem = "data/standin12.mtx";
  config.block_size = 2;
  config.max_iterations = 12;
  config.tolerance = 1e-10;
  const RunResult result = run(config);
  CHECK(result.exit_code == 0);
  CHECK(result.converged);
}

TEST_CASE("run on a matrix market file with an explicit right-hand side") {
  RunConfig config;
  config.problem = "data/standin12.mtx";
  config.rhs_path = "data/standin12_rhs.mtx";
  config.max_iterations = 12;
  const RunResult result = run(config);
  CHECK(result.exit_code == 0);
  CHECK(result.records.front().gmres_rel.size() == 1);
}
