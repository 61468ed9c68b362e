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

#include "occgame/linprog.h"

#include <algorithm>
#include <cmath>

#include "occgame/errors.h"

namespace occgame {
namespace {

constexpr int kMaxIterations = 100000;

enum class PhaseOutcome { kOptimal, kUnbounded };

// Primal simplex on max cost'x s.t. m x = rhs, x >= 0 from a feasible basis.
// Columns >= `num_enterable` never enter. Bland's rule throughout.
PhaseOutcome RunSimplex(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs,
                        const Eigen::VectorXd& cost, int num_enterable,
                        double tol, std::vector<int>& basis, int& iterations) {
  const int rows = static_cast<int>(m.rows());
  std::vector<char> is_basic(m.cols(), 0);
  for (int j : basis) is_basic[j] = 1;
  for (;;) {
    if (++iterations > kMaxIterations) {
      throw NumericalError("simplex iteration limit reached", iterations);
    }
    Eigen::MatrixXd b(rows, rows);
    Eigen::VectorXd cb(rows);
    for (int i = 0; i < rows; ++i) {
      b.col(i) = m.col(basis[i]);
      cb(i) = cost(basis[i]);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    const Eigen::VectorXd xb = lu.solve(rhs);
    const Eigen::VectorXd y = lu.transpose().solve(cb);

    int entering = -1;
    for (int j = 0; j < num_enterable; ++j) {
      if (is_basic[j]) continue;
      if (cost(j) - m.col(j).dot(y) > tol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return PhaseOutcome::kOptimal;

    const Eigen::VectorXd u = lu.solve(m.col(entering));
    int leave = -1;
    double best = 0.0;
    for (int i = 0; i < rows; ++i) {
      if (u(i) <= tol) continue;
      const double ratio = std::max(0.0, xb(i)) / u(i);
      if (leave < 0 || ratio < best - tol) {
        best = ratio;
        leave = i;
      } else if (ratio <= best + tol && basis[i] < basis[leave]) {
        best = std::min(best, ratio);
        leave = i;
      }
    }
    if (leave < 0) return PhaseOutcome::kUnbounded;
    is_basic[basis[leave]] = 0;
    is_basic[entering] = 1;
    basis[leave] = entering;
  }
}

}  // namespace

std::vector<int> IndependentRows(const Eigen::MatrixXd& a, double tol) {
  if (a.rows() == 0) return {};
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.transpose());
  qr.setThreshold(tol);
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> rows(rank);
  for (int k = 0; k < rank; ++k) rows[k] = qr.colsPermutation().indices()(k);
  std::sort(rows.begin(), rows.end());
  return rows;
}

LpResult SolveStandardFormLp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& c, double tol) {
  const int n = static_cast<int>(a.cols());
  LpResult result;
  result.x = Eigen::VectorXd::Zero(n);
  result.duals = Eigen::VectorXd::Zero(a.rows());

  const std::vector<int> rows = IndependentRows(a);
  const int m = static_cast<int>(rows.size());
  Eigen::MatrixXd tableau = Eigen::MatrixXd::Zero(m, n + m);
  Eigen::VectorXd rhs(m);
  std::vector<double> sign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    sign[i] = b(rows[i]) < 0.0 ? -1.0 : 1.0;
    tableau.row(i).head(n) = sign[i] * a.row(rows[i]);
    tableau(i, n + i) = 1.0;
    rhs(i) = sign[i] * b(rows[i]);
  }

  // Phase 1: drive the artificial columns to zero.
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;
  Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(n + m);
  phase1_cost.tail(m).setConstant(-1.0);
  RunSimplex(tableau, rhs, phase1_cost, n + m, tol, basis, result.iterations);

  auto basic_solution = [&](const std::vector<int>& bas) {
    Eigen::MatrixXd bm(m, m);
    for (int i = 0; i < m; ++i) bm.col(i) = tableau.col(bas[i]);
    const Eigen::VectorXd xb = bm.partialPivLu().solve(rhs);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n + m);
    for (int i = 0; i < m; ++i) full(bas[i]) = xb(i);
    return full;
  };
  Eigen::VectorXd full = basic_solution(basis);
  const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
  if (m > 0 && full.tail(m).sum() > 1e-9 * scale) return result;

  // Pivot remaining (zero-valued) artificials out of the basis.
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    Eigen::MatrixXd bm(m, m);
    for (int k = 0; k < m; ++k) bm.col(k) = tableau.col(basis[k]);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bm);
    int best_j = -1;
    double best_mag = 1e-9;
    for (int j = 0; j < n; ++j) {
      if (std::find(basis.begin(), basis.end(), j) != basis.end()) continue;
      const double mag = std::abs(lu.solve(tableau.col(j))(i));
      if (mag > best_mag) {
        best_mag = mag;
        best_j = j;
      }
    }
    if (best_j >= 0) basis[i] = best_j;
  }

  // Phase 2 on the original objective; artificials may not re-enter.
  Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(n + m);
  phase2_cost.head(n) = c;
  if (RunSimplex(tableau, rhs, phase2_cost, n, tol, basis, result.iterations) ==
      PhaseOutcome::kUnbounded) {
    result.status = LpStatus::kUnbounded;
    return result;
  }

  full = basic_solution(basis);
  result.x = full.head(n).cwiseMax(0.0);
  if ((a * result.x - b).lpNorm<Eigen::Infinity>() >
      1e-8 * (1.0 + b.lpNorm<Eigen::Infinity>())) {
    // A dropped row was inconsistent with the kept ones.
    return result;
  }
  result.status = LpStatus::kOptimal;
  result.value = c.dot(result.x);
  result.basis = basis;

  Eigen::MatrixXd bm(m, m);
  Eigen::VectorXd cb(m);
  for (int i = 0; i < m; ++i) {
    bm.col(i) = tableau.col(basis[i]);
    cb(i) = phase2_cost(basis[i]);
  }
  const Eigen::VectorXd y = bm.partialPivLu().transpose().solve(cb);
  for (int i = 0; i < m; ++i) result.duals(rows[i]) = sign[i] * y(i);
  result.duality_gap = std::abs(b.dot(result.duals) - result.value);
  const Eigen::VectorXd reduced = c - a.transpose() * result.duals;
  result.dual_infeasibility = std::max(0.0, reduced.maxCoeff());
  return result;
}

}  // namespace occgame
