// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace blockry {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown when an argument violates an operation's contract.
class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_finite(const Matrix& a, const std::string& what) {
  if (!a.allFinite()) {
    throw contract_error(what + ": entries must be finite");
  }
}

}  // namespace blockry
