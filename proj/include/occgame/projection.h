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

#ifndef OCCGAME_PROJECTION_H_
#define OCCGAME_PROJECTION_H_

#include <Eigen/Dense>

#include "occgame/occupancy.h"

namespace occgame {

// h(rho) = coefficient * ||rho||^2, or the negative entropy sum rho log rho.
struct Regularizer {
  enum class Kind { kQuadratic, kEntropy };

  Kind kind = Kind::kQuadratic;
  double coefficient = 0.5;

  static Regularizer Quadratic(double c) { return {Kind::kQuadratic, c}; }
  static Regularizer Entropy() { return {Kind::kEntropy, 1.0}; }

  // Strong-convexity modulus: 2c w.r.t. the Euclidean norm, 1 for entropy
  // w.r.t. L1 on the simplex.
  double StrongConvexity() const {
    return kind == Kind::kQuadratic ? 2.0 * coefficient : 1.0;
  }
};

struct ProjectionResult {
  Eigen::VectorXd point;
  // Norm of the KKT residual: stationarity, multiplier signs, feasibility.
  double kkt_residual = 0.0;
  int active_set_changes = 0;
};

// argmin ||x - y||^2 over the (possibly shrunk) occupation polytope. Equality
// rows are eliminated through their nullspace and the bounds x >= delta are
// handled by a primal active-set loop. `warm_start`, if given, must be a
// feasible point.
ProjectionResult EuclideanProjectDetailed(
    const OccupationPolytope& polytope, const Eigen::VectorXd& y,
    const Eigen::VectorXd* warm_start = nullptr);

inline Eigen::VectorXd EuclideanProject(const OccupationPolytope& polytope,
                                        const Eigen::VectorXd& y) {
  return EuclideanProjectDetailed(polytope, y).point;
}

// argmax <rho, Y> - c ||rho||^2 = projection of Y / (2c).
ProjectionResult DaArgmax(const OccupationPolytope& polytope,
                          const Eigen::VectorXd& score, const Regularizer& reg,
                          const Eigen::VectorXd* warm_start = nullptr);

// rho'(x) proportional to rho(x) exp(g(x)); the entropic step on the simplex.
Eigen::VectorXd KlSimplexStep(const Eigen::VectorXd& rho,
                              const Eigen::VectorXd& g);

struct KlProjectionResult {
  Eigen::VectorXd point;
  double residual = 0.0;
  int iterations = 0;
};

// argmin_{rho in P} KL(rho || q) for strictly positive q, by Newton ascent on
// the dual of the equality constraints. The bound delta of `polytope` is
// ignored: the I-projection is taken onto the full polytope.
KlProjectionResult KlProject(const OccupationPolytope& polytope,
                             const Eigen::VectorXd& q);

// sum_x p(x) log(p(x) / q(x)) with 0 log 0 = 0.
double KlDivergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace occgame

#endif  // OCCGAME_PROJECTION_H_
