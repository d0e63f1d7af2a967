// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#include "blockry/problems.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace blockry {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void parse_fail(Index line, const std::string& message) {
  throw std::runtime_error("matrix market parse error at line " + std::to_string(line) +
                           ": " + message);
}

Matrix unit_columns(Index n, const std::vector<Index>& indices) {
  Matrix b = Matrix::Zero(n, static_cast<Index>(indices.size()));
  for (Index c = 0; c < b.cols(); ++c) b(indices[static_cast<std::size_t>(c)], c) = 1.0;
  return b;
}

}  // namespace

std::shared_ptr<const BlockOperator> shift_matrix(Index n) {
  if (n < 2) throw contract_error("shift_matrix: n must be at least 2");
  std::vector<CsrOperator::Triplet> entries;
  entries.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    entries.push_back({(i + 1) % n, i, 1.0});
  }
  return std::make_shared<CsrOperator>(n, std::move(entries));
}

MatrixMarketData read_matrix_market(std::istream& in) {
  std::string line;
  Index line_no = 1;
  if (!std::getline(in, line)) parse_fail(1, "empty stream");

  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") parse_fail(1, "missing %%MatrixMarket banner");
  if (lower(object) != "matrix") parse_fail(1, "unsupported object '" + object + "'");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array") {
    parse_fail(1, "unsupported format '" + format + "'");
  }
  if (field != "real" && field != "integer") {
    throw std::runtime_error("matrix market: unsupported field '" + field +
                             "' (only real and integer are supported)");
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw std::runtime_error("matrix market: unsupported symmetry '" + symmetry +
                             "' (only general and symmetric are supported)");
  }

  MatrixMarketData data;
  data.coordinate = format == "coordinate";
  data.symmetric = symmetry == "symmetric";

  // Size line, skipping comments and blanks.
  Index declared_entries = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream sizes(line);
    if (data.coordinate) {
      if (!(sizes >> data.rows >> data.cols >> declared_entries)) {
        parse_fail(line_no, "malformed size line");
      }
    } else {
      if (!(sizes >> data.rows >> data.cols)) parse_fail(line_no, "malformed size line");
    }
    break;
  }
  if (data.rows <= 0 || data.cols <= 0) parse_fail(line_no, "invalid dimensions");

  if (data.coordinate) {
    data.entries.reserve(static_cast<std::size_t>(declared_entries));
    Index seen = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '%') continue;
      std::istringstream entry(line);
      Index row = 0, col = 0;
      double value = 0.0;
      if (!(entry >> row >> col >> value)) parse_fail(line_no, "malformed entry");
      if (row < 1 || row > data.rows || col < 1 || col > data.cols) {
        parse_fail(line_no, "entry index out of range");
      }
      data.entries.push_back({row - 1, col - 1, value});
      if (data.symmetric && row != col) {
        data.entries.push_back({col - 1, row - 1, value});
      }
      ++seen;
    }
    if (seen != declared_entries) {
      parse_fail(line_no, "expected " + std::to_string(declared_entries) +
                              " entries, found " + std::to_string(seen));
    }
  } else {
    data.dense = Matrix::Zero(data.rows, data.cols);
    // Array format is column-major; symmetric files store the lower triangle.
    Index col = 0;
    Index row = 0;
    Index count = 0;
    const Index expected = data.symmetric
                               ? data.rows * (data.rows + 1) / 2
                               : data.rows * data.cols;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '%') continue;
      std::istringstream entry(line);
      double value = 0.0;
      while (entry >> value) {
        if (count >= expected) parse_fail(line_no, "too many array values");
        data.dense(row, col) = value;
        if (data.symmetric) data.dense(col, row) = value;
        ++count;
        ++row;
        if (row >= data.rows) {
          ++col;
          row = data.symmetric ? col : 0;
        }
      }
    }
    if (count != expected) {
      parse_fail(line_no, "expected " + std::to_string(expected) + " array values, found " +
                              std::to_string(count));
    }
    if (data.symmetric && data.rows != data.cols) {
      parse_fail(line_no, "symmetric array must be square");
    }
  }
  return data;
}

MatrixMarketData read_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  return read_matrix_market(in);
}

std::shared_ptr<const BlockOperator> parse_matrix_market(std::istream& in) {
  MatrixMarketData data = read_matrix_market(in);
  if (data.rows != data.cols) {
    throw std::runtime_error("matrix market: operator must be square");
  }
  if (!data.coordinate) {
    return std::make_shared<DenseOperator>(data.dense);
  }
  return std::make_shared<CsrOperator>(data.rows, std::move(data.entries));
}

std::shared_ptr<const BlockOperator> parse_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  return parse_matrix_market(in);
}

Matrix parse_matrix_market_dense(std::istream& in) {
  MatrixMarketData data = read_matrix_market(in);
  if (!data.coordinate) return data.dense;
  Matrix dense = Matrix::Zero(data.rows, data.cols);
  for (const auto& t : data.entries) dense(t.row, t.col) += t.value;
  return dense;
}

Matrix parse_matrix_market_dense_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  return parse_matrix_market_dense(in);
}

void write_matrix_market(std::ostream& out, Index rows, Index cols,
                         const std::vector<CsrOperator::Triplet>& entries) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << rows << " " << cols << " " << entries.size() << "\n";
  char buffer[128];
  for (const auto& t : entries) {
    std::snprintf(buffer, sizeof(buffer), "%lld %lld %.16e\n",
                  static_cast<long long>(t.row + 1), static_cast<long long>(t.col + 1),
                  t.value);
    out << buffer;
  }
}

ProblemSpec builtin_experiment(const std::string& name, const ExperimentOptions& options) {
  ProblemSpec spec;
  spec.label = name;
  if (name == "total-stag") {
    const Index n = 200;
    spec.op = shift_matrix(n);
    spec.b = unit_columns(n, {0, 49, 99, 149});
    spec.expected_events = {{49, "dependent basis vector replaced (p=1)"},
                            {50, "all columns converge exactly"}};
  } else if (name == "partial-stag") {
    const Index n = 30;
    spec.op = shift_matrix(n);
    spec.b = unit_columns(n, {0, 24});
    spec.expected_events = {{6, "column 1 converges; dependent vector replaced (p=1)"},
                            {15, "column 2 converges (23 without replacement)"}};
  } else if (name == "sherman4-mixed") {
    std::string data_dir = options.data_dir;
    if (data_dir.empty()) {
      const char* env = std::getenv("BLOCKRY_DATA");
      data_dir = env != nullptr ? env : "data";
    }
    std::string matrix_path = options.matrix_path;
    if (matrix_path.empty()) matrix_path = data_dir + "/sherman4.mtx";
    if (!std::filesystem::exists(matrix_path)) {
      throw std::runtime_error(
          "matrix file not found: " + matrix_path +
          " (download sherman4.mtx from the SuiteSparse Matrix Collection, e.g. "
          "https://sparse.tamu.edu/HB/sherman4, and place it under $BLOCKRY_DATA)");
    }
    auto first = parse_matrix_market_file(matrix_path);
    const Index n1 = first->dimension();
    const Index n2 = 200;
    spec.op = block_diagonal(first, shift_matrix(n2));
    spec.b = Matrix::Zero(n1 + n2, 2);

    // First column: the right-hand side packaged with the matrix when
    // present, otherwise a seeded random vector (recorded in the notes).
    const std::string stem = matrix_path.size() > 4
                                 ? matrix_path.substr(0, matrix_path.size() - 4)
                                 : matrix_path;
    const std::string rhs_path = stem + "_rhs.mtx";
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    if (std::filesystem::exists(rhs_path)) {
      const Matrix rhs = parse_matrix_market_dense_file(rhs_path);
      if (rhs.rows() != n1 || rhs.cols() < 1) {
        throw std::runtime_error("packaged right-hand side has the wrong shape: " +
                                 rhs_path);
      }
      spec.b.block(0, 0, n1, 1) = rhs.col(0);
      spec.notes.push_back("first column uses the packaged right-hand side " + rhs_path);
    } else {
      Vector substitute(n1);
      for (Index i = 0; i < n1; ++i) substitute(i) = normal(rng);
      spec.b.block(0, 0, n1, 1) = substitute;
      spec.notes.push_back("packaged right-hand side missing; substituted a seeded "
                           "random vector (seed " +
                           std::to_string(options.seed) + ")");
    }
    // Second column: a seeded random vector scaled to 2-norm 1e7.
    Vector scaled(n1);
    for (Index i = 0; i < n1; ++i) scaled(i) = normal(rng);
    scaled *= 1e7 / scaled.norm();
    spec.b.block(0, 1, n1, 1) = scaled;

    // Shift part: unit vectors chosen to stagnate there.
    spec.b(n1 + 49, 0) = 1.0;
    spec.b(n1 + 149, 1) = 1.0;
    spec.label = "sherman4-mixed(" + matrix_path + ")";
  } else {
    throw contract_error("unknown builtin experiment: " + name);
  }
  spec.x0 = Matrix::Zero(spec.op->dimension(), spec.b.cols());
  return spec;
}

}  // namespace blockry
