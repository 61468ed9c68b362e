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

#ifndef OCCGAME_OCCUPANCY_H_
#define OCCGAME_OCCUPANCY_H_

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "occgame/game.h"

namespace occgame {

// Long-run state-action frequencies of one player. Entry s * |A| + a holds
// rho(s, a).
struct OccupationMeasure {
  int num_states = 0;
  int num_actions = 0;
  Eigen::VectorXd values;

  double operator()(int s, int a) const { return values(s * num_actions + a); }
  // nu(s) = sum_a rho(s, a).
  double StateMass(int s) const {
    return values.segment(s * num_actions, num_actions).sum();
  }
};

// {rho >= delta : E rho = e} where E stacks one flow-balance row per state
// and a final normalization row. The flow rows sum to zero, so one of them
// is always redundant.
class OccupationPolytope {
 public:
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int dim() const { return num_states_ * num_actions_; }
  int player() const { return player_; }
  double delta() const { return delta_; }

  const Eigen::MatrixXd& equality() const { return equality_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }

  // Largest t such that some feasible rho has every entry >= t, and a point
  // attaining it. Computed once per chain by an LP.
  double max_floor() const { return max_floor_; }
  const Eigen::VectorXd& max_floor_point() const { return max_floor_point_; }

  // ||E x - e||_inf.
  double EqualityResidual(const Eigen::VectorXd& x) const;
  // max(0, delta - min_j x_j).
  double BoundViolation(const Eigen::VectorXd& x) const;
  bool Contains(const Eigen::VectorXd& x, double tol = 1e-8) const {
    return EqualityResidual(x) <= tol && BoundViolation(x) <= tol;
  }

 private:
  friend OccupationPolytope BuildPolytope(const PlayerChain&, int);
  friend OccupationPolytope Shrink(const OccupationPolytope&, double);
  friend OccupationPolytope PolytopeFromJson(const nlohmann::json&);

  int num_states_ = 0;
  int num_actions_ = 0;
  int player_ = 0;
  double delta_ = 0.0;
  Eigen::MatrixXd equality_;
  Eigen::VectorXd rhs_;
  double max_floor_ = 0.0;
  Eigen::VectorXd max_floor_point_;
};

OccupationPolytope BuildPolytope(const PlayerChain& chain, int player = 0);

// Same equalities with lower bound `delta`. Throws EmptyShrunkPolytope when
// no feasible point has every coordinate >= delta.
OccupationPolytope Shrink(const OccupationPolytope& polytope, double delta);

// Policy with pi(a|s) = rho(s,a) / nu(s). States with nu(s) == 0 get the
// uniform row and are listed in `fallback_states`.
struct PolicyFromOccupationResult {
  Policy policy;
  std::vector<int> fallback_states;
};
PolicyFromOccupationResult PolicyFromOccupation(const OccupationMeasure& rho);

// P^pi(s'|s) = sum_a P(s'|s,a) pi(a|s).
Eigen::MatrixXd InducedKernel(const PlayerChain& chain, const Policy& policy);

// Stationary distribution of a row-stochastic kernel with a single recurrent
// class. Dense solve for up to 64 states, power iteration on the lazy chain
// beyond. Throws NonErgodic otherwise.
Eigen::VectorXd StationaryDistribution(const Eigen::MatrixXd& kernel);

// rho(s,a) = nu(s) pi(a|s) for the stationary nu of P^pi.
OccupationMeasure OccupationFromPolicy(const PlayerChain& chain,
                                       const Policy& policy);

struct DeltaOptions {
  // Returned as-is (after a feasibility check) when set.
  std::optional<double> override_delta;
  // Refuse chains with more deterministic policies than this.
  double max_vertices = 1e5;
};

// Largest delta on the grid 2^-k / (|S||A|), k = 1..40, whose shrunk polytope
// is feasible and lies within eps / sqrt(|S||A|) of every vertex of the full
// polytope. Vertices are the occupations of the closed recurrent classes
// of deterministic policies.
double ComputeDelta(const PlayerChain& chain, double epsilon,
                    const DeltaOptions& options = {});

struct MixingEstimate {
  double tau = 1.0;
  // Per-step contraction of the worst sampled induced kernel on sum-zero
  // row vectors.
  double contraction = 0.0;
  Policy worst_policy;
};

// tau = max over sampled interior policies of -k / ln(sigma_max(Q (P^pi)^k)),
// floored at 1, where Q = I - 11'/|S| removes the mean and k is the smallest
// power with sigma_max < 1. For k = 1 and a normal kernel this is
// -1 / ln(sigma_2). Policy rows are floor + (1 - |A| floor) * Dirichlet(1).
MixingEstimate MixingTimeBound(const PlayerChain& chain, int samples = 200,
                               std::uint64_t seed = 0, double floor = 1e-3);

// Flow-balance and normalization check.
double OccupationResidual(const PlayerChain& chain, const Eigen::VectorXd& rho);

nlohmann::json OccupationToJson(const OccupationMeasure& rho);
OccupationMeasure OccupationFromJson(const nlohmann::json& j);
nlohmann::json PolytopeToJson(const OccupationPolytope& polytope);
OccupationPolytope PolytopeFromJson(const nlohmann::json& j);

}  // namespace occgame

#endif  // OCCGAME_OCCUPANCY_H_
