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

#include "occgame/projection.h"

#include <cmath>
#include <limits>
#include <vector>

#include "occgame/errors.h"
#include "occgame/linprog.h"

namespace occgame {
namespace {

Eigen::MatrixXd SelectRows(const Eigen::MatrixXd& m,
                           const std::vector<int>& rows) {
  Eigen::MatrixXd out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = m.row(rows[r]);
  return out;
}

Eigen::VectorXd SelectEntries(const Eigen::VectorXd& v,
                              const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out(k) = v(idx[k]);
  return out;
}

Eigen::MatrixXd SelectCols(const Eigen::MatrixXd& m,
                           const std::vector<int>& cols) {
  Eigen::MatrixXd out(m.rows(), cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(k) = m.col(cols[k]);
  return out;
}

}  // namespace

ProjectionResult EuclideanProjectDetailed(const OccupationPolytope& polytope,
                                          const Eigen::VectorXd& y,
                                          const Eigen::VectorXd* warm_start) {
  const int dim = polytope.dim();
  if (y.size() != dim) throw InputError("projection target has wrong length");
  if (!y.allFinite()) throw InputError("projection target is not finite");
  const double delta = polytope.delta();
  const Eigen::MatrixXd eq =
      SelectRows(polytope.equality(), IndependentRows(polytope.equality()));

  Eigen::VectorXd x;
  if (warm_start && warm_start->size() == dim &&
      polytope.Contains(*warm_start, 1e-10)) {
    x = *warm_start;
  } else {
    x = polytope.max_floor_point();
  }
  x = x.cwiseMax(delta);

  std::vector<char> fixed(dim, 0);
  ProjectionResult result;
  const int max_iterations = 50 * dim + 100;
  Eigen::VectorXd multipliers;
  // Set after a full step: x then minimizes over the current face.
  bool face_optimal = false;
  for (int iteration = 0;; ++iteration) {
    if (iteration > max_iterations) {
      throw NumericalError("active-set projection did not converge",
                           (x - y).norm());
    }
    std::vector<int> free_idx;
    std::vector<int> fixed_idx;
    for (int j = 0; j < dim; ++j) (fixed[j] ? fixed_idx : free_idx).push_back(j);

    const Eigen::VectorXd gap = SelectEntries(y - x, free_idx);
    const Eigen::MatrixXd eq_free = SelectCols(eq, free_idx);
    // Orthonormal basis of range(eq_free^T); the step is gap minus its
    // component there.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(eq_free.transpose());
    qr.setThreshold(1e-12);
    const int rank = static_cast<int>(qr.rank());
    const Eigen::MatrixXd basis =
        (qr.householderQ() * Eigen::MatrixXd::Identity(free_idx.size(), rank));
    const Eigen::VectorXd step = gap - basis * (basis.transpose() * gap);

    if (face_optimal || step.norm() <= 1e-13 * (1.0 + x.norm() + gap.norm())) {
      face_optimal = false;
      // grad = x - y = eq^T mu + lambda on the fixed coordinates.
      const Eigen::VectorXd grad = x - y;
      multipliers = eq_free.transpose().colPivHouseholderQr().solve(
          SelectEntries(grad, free_idx));
      int drop = -1;
      double most_negative = -1e-12;
      for (int j : fixed_idx) {
        const double lambda = grad(j) - eq.col(j).dot(multipliers);
        if (lambda < most_negative) {
          most_negative = lambda;
          drop = j;
        }
      }
      if (drop < 0) break;
      fixed[drop] = 0;
      ++result.active_set_changes;
    } else {
      double alpha = 1.0;
      int blocking = -1;
      for (std::size_t k = 0; k < free_idx.size(); ++k) {
        if (step(k) >= 0.0) continue;
        const int j = free_idx[k];
        const double limit = std::max(0.0, x(j) - delta) / -step(k);
        if (limit < alpha) {
          alpha = limit;
          blocking = j;
        }
      }
      for (std::size_t k = 0; k < free_idx.size(); ++k) {
        x(free_idx[k]) += alpha * step(k);
      }
      if (blocking < 0) {
        face_optimal = true;
        continue;
      }
      fixed[blocking] = 1;
      x(blocking) = delta;
      ++result.active_set_changes;
    }
  }

  // KKT residual: stationarity with nonnegative bound multipliers,
  // complementarity, and primal feasibility.
  const Eigen::VectorXd grad = x - y;
  Eigen::VectorXd stationarity = grad - eq.transpose() * multipliers;
  double worst_sign = 0.0;
  for (int j = 0; j < dim; ++j) {
    if (fixed[j]) {
      worst_sign = std::max(worst_sign, -stationarity(j));
      stationarity(j) = 0.0;
    }
  }
  result.kkt_residual =
      std::max({stationarity.lpNorm<Eigen::Infinity>(), worst_sign,
                polytope.EqualityResidual(x), polytope.BoundViolation(x)});
  result.point = std::move(x);
  return result;
}

ProjectionResult DaArgmax(const OccupationPolytope& polytope,
                          const Eigen::VectorXd& score, const Regularizer& reg,
                          const Eigen::VectorXd* warm_start) {
  if (reg.kind != Regularizer::Kind::kQuadratic || !(reg.coefficient > 0.0)) {
    throw InputError("dual-averaging argmax needs a quadratic regularizer");
  }
  return EuclideanProjectDetailed(polytope, score / (2.0 * reg.coefficient),
                                  warm_start);
}

Eigen::VectorXd KlSimplexStep(const Eigen::VectorXd& rho,
                              const Eigen::VectorXd& g) {
  if (rho.size() != g.size()) throw InputError("step has wrong length");
  if (!g.allFinite()) throw InputError("step vector is not finite");
  Eigen::VectorXd logits(rho.size());
  for (int j = 0; j < rho.size(); ++j) {
    logits(j) = rho(j) > 0.0 ? std::log(rho(j)) + g(j)
                             : -std::numeric_limits<double>::infinity();
  }
  const double top = logits.maxCoeff();
  Eigen::VectorXd out = (logits.array() - top).exp().matrix();
  return out / out.sum();
}

KlProjectionResult KlProject(const OccupationPolytope& polytope,
                             const Eigen::VectorXd& q) {
  const int dim = polytope.dim();
  if (q.size() != dim) throw InputError("KL projection input has wrong length");
  if (!(q.minCoeff() > 0.0) || !q.allFinite()) {
    throw InputError("KL projection needs a strictly positive input");
  }
  const Eigen::MatrixXd eq =
      SelectRows(polytope.equality(), IndependentRows(polytope.equality()));
  const Eigen::VectorXd rhs =
      SelectEntries(polytope.rhs(), IndependentRows(polytope.equality()));
  const Eigen::ArrayXd log_q = q.array().log();

  // Primal point for multipliers mu: rho = q exp(E^T mu - 1).
  auto primal = [&](const Eigen::VectorXd& mu) {
    return (log_q + (eq.transpose() * mu).array() - 1.0).exp().matrix().eval();
  };
  auto dual = [&](const Eigen::VectorXd& mu, const Eigen::VectorXd& rho) {
    return mu.dot(rhs) - rho.sum();
  };

  KlProjectionResult result;
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(eq.rows());
  Eigen::VectorXd rho = primal(mu);
  double value = dual(mu, rho);
  for (; result.iterations < 10000; ++result.iterations) {
    const Eigen::VectorXd gradient = rhs - eq * rho;
    result.residual = gradient.lpNorm<Eigen::Infinity>();
    const Eigen::MatrixXd hessian = eq * rho.asDiagonal() * eq.transpose();
    const Eigen::VectorXd direction = hessian.ldlt().solve(gradient);
    // Backtracking on the concave dual. Near the optimum the dual value is
    // flat to rounding, so a step that shrinks the residual is also taken.
    double t = 1.0;
    Eigen::VectorXd next_mu;
    Eigen::VectorXd next_rho;
    double next_value = -std::numeric_limits<double>::infinity();
    const double slope = gradient.dot(direction);
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      next_mu = mu + t * direction;
      next_rho = primal(next_mu);
      next_value = dual(next_mu, next_rho);
      if (!std::isfinite(next_value)) continue;
      const double next_residual =
          (rhs - eq * next_rho).lpNorm<Eigen::Infinity>();
      if (next_value >= value + 0.25 * t * slope ||
          next_residual <= (1.0 - 0.5 * t) * result.residual) {
        break;
      }
    }
    const double change = std::abs(next_value - value) / (1.0 + std::abs(value));
    mu = next_mu;
    rho = next_rho;
    value = next_value;
    result.residual = (rhs - eq * rho).lpNorm<Eigen::Infinity>();
    if (result.residual <= 1e-9 && change <= 1e-12) {
      result.point = rho;
      ++result.iterations;
      return result;
    }
  }
  throw NumericalError("KL projection did not converge", result.residual);
}

double KlDivergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double total = 0.0;
  for (int j = 0; j < p.size(); ++j) {
    if (p(j) > 0.0) total += p(j) * std::log(p(j) / q(j));
  }
  return total;
}

}  // namespace occgame
