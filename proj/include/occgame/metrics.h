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

#ifndef OCCGAME_METRICS_H_
#define OCCGAME_METRICS_H_

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "occgame/game.h"
#include "occgame/linprog.h"
#include "occgame/occupancy.h"

namespace occgame {

// One occupation vector per player.
using Profile = std::vector<Eigen::VectorXd>;

// v_i(rho_-i)(s_i, a_i) = sum over the others' pairs of prod_{j != i}
// rho_j(s_j, a_j) r_i(s, a). Throws EnumerationTooLarge past the game's cap.
Eigen::VectorXd ExactGradient(const Game& game, const Profile& rho, int player);

// V_i(rho) = sum over joint pairs of prod_j rho_j(s_j, a_j) r_i(s, a).
double ExactPayoff(const Game& game, const Profile& rho, int player);

struct BestResponse {
  double value = 0.0;
  Eigen::VectorXd vertex;
  LpResult certificate;
};

// max <theta, g> over the polytope (shrunk bounds included), solved by the
// simplex method. Throws NumericalError if the duality gap exceeds 1e-9.
BestResponse BestResponseValue(const OccupationPolytope& polytope,
                               const Eigen::VectorXd& g);

// max_theta Psi(theta, rho) = sum_i [max_theta_i <v_i, theta_i> - <v_i, rho_i>].
double NiGap(const Game& game, const Profile& rho,
             const std::vector<OccupationPolytope>& polytopes);

// max_theta sum_l (eta_l / w) Psi(theta, rho^l), using linearity in theta.
double AveragedNiGap(const Game& game, const std::vector<Profile>& trajectory,
                     const std::vector<double>& weights,
                     const std::vector<OccupationPolytope>& polytopes);

// d(k) = sum_l (eta_l / w) <v(rho^l), rho* - rho^l>.
double StableResidual(const Game& game, const std::vector<Profile>& trajectory,
                      const std::vector<double>& weights,
                      const Profile& rho_star);

struct BiasEntry {
  long long burn_in = 0;
  int player = 0;
  int coordinate = 0;
  double mean = 0.0;
  double exact = 0.0;
  double standard_error = 0.0;
  double bound = 0.0;  // e^(-d / tau) + 3 SE
  bool violated = false;

  double bias() const { return mean - exact; }
};

// Monte Carlo mean of the batch estimator for each burn-in d, against the
// exact gradient at the policies' occupation measures.
std::vector<BiasEntry> EstimatorBiasReport(const Game& game,
                                           const std::vector<Policy>& policies,
                                           const std::vector<long long>& burn_ins,
                                           long long batches, double tau,
                                           std::uint64_t seed);

// The constant c if sum_i r_i(s, a) == c for every joint (s, a) within 1e-9.
std::optional<double> CheckConstantSum(const Game& game);

}  // namespace occgame

#endif  // OCCGAME_METRICS_H_
