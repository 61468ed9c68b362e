// Copyright 2026 The occgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OCCGAME_LINPROG_H_
#define OCCGAME_LINPROG_H_

#include <vector>

#include <Eigen/Dense>

namespace occgame {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

// Solution of max c'x s.t. Ax = b, x >= 0, with its optimality certificate.
struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double value = 0.0;
  Eigen::VectorXd x;
  // Indices of basic columns of the final basis.
  std::vector<int> basis;
  // Row multipliers y for the original rows (zero on dropped redundant rows).
  Eigen::VectorXd duals;
  // |b'y - c'x|.
  double duality_gap = 0.0;
  // max_j (c_j - A_j'y)^+; zero for an exactly dual-feasible certificate.
  double dual_infeasibility = 0.0;
  int iterations = 0;
};

// Dense two-phase revised simplex with Bland's anti-cycling rule. Linearly
// dependent equality rows are detected up front and dropped (inconsistent
// ones make the problem infeasible).
LpResult SolveStandardFormLp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& c, double tol = 1e-10);

// Indices of a maximal set of linearly independent rows of `a`.
std::vector<int> IndependentRows(const Eigen::MatrixXd& a, double tol = 1e-10);

}  // namespace occgame

#endif  // OCCGAME_LINPROG_H_
