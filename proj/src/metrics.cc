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

#include "occgame/metrics.h"

#include <cmath>

#include "occgame/errors.h"
#include "occgame/learner.h"

namespace occgame {
namespace {

void CheckProfile(const Game& game, const Profile& rho) {
  if (static_cast<int>(rho.size()) != game.num_players()) {
    throw InputError("profile needs one occupation vector per player");
  }
  for (int i = 0; i < game.num_players(); ++i) {
    if (rho[i].size() != game.chain(i).dim()) {
      throw InputError("occupation vector of player " + std::to_string(i) +
                       " has wrong length");
    }
  }
  if (!game.Enumerable()) {
    throw EnumerationTooLarge(game.JointSize(), game.enumeration_cap());
  }
}

// Calls fn(pairs, states, actions, joint_index) for every joint profile in
// mixed-radix order (player 0 most significant).
template <typename Fn>
void ForEachJointPair(const Game& game, Fn&& fn) {
  const int n = game.num_players();
  std::vector<int> pairs(n, 0);
  std::vector<int> states(n, 0);
  std::vector<int> actions(n, 0);
  const auto total = static_cast<std::size_t>(game.JointSize());
  for (std::size_t joint = 0; joint < total; ++joint) {
    for (int j = 0; j < n; ++j) {
      const int na = game.chain(j).num_actions();
      states[j] = pairs[j] / na;
      actions[j] = pairs[j] % na;
    }
    fn(pairs, states, actions, joint);
    for (int j = n - 1; j >= 0; --j) {
      if (++pairs[j] < game.chain(j).dim()) break;
      pairs[j] = 0;
    }
  }
}

double RewardAt(const Game& game, const TabularReward* table,
                const std::vector<int>& states, const std::vector<int>& actions,
                std::size_t joint, int player) {
  return table ? table->At(player, joint)
               : game.Reward(states, actions, player);
}

}  // namespace

Eigen::VectorXd ExactGradient(const Game& game, const Profile& rho,
                              int player) {
  CheckProfile(game, rho);
  const auto* table = dynamic_cast<const TabularReward*>(&game.reward());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(game.chain(player).dim());
  ForEachJointPair(game, [&](const std::vector<int>& pairs,
                             const std::vector<int>& states,
                             const std::vector<int>& actions,
                             std::size_t joint) {
    double weight = 1.0;
    for (int j = 0; j < game.num_players(); ++j) {
      if (j != player) weight *= rho[j](pairs[j]);
    }
    if (weight == 0.0) return;
    v(pairs[player]) +=
        weight * RewardAt(game, table, states, actions, joint, player);
  });
  return v;
}

double ExactPayoff(const Game& game, const Profile& rho, int player) {
  CheckProfile(game, rho);
  const auto* table = dynamic_cast<const TabularReward*>(&game.reward());
  double total = 0.0;
  ForEachJointPair(game, [&](const std::vector<int>& pairs,
                             const std::vector<int>& states,
                             const std::vector<int>& actions,
                             std::size_t joint) {
    double weight = 1.0;
    for (int j = 0; j < game.num_players(); ++j) weight *= rho[j](pairs[j]);
    if (weight == 0.0) return;
    total += weight * RewardAt(game, table, states, actions, joint, player);
  });
  return total;
}

BestResponse BestResponseValue(const OccupationPolytope& polytope,
                               const Eigen::VectorXd& g) {
  if (g.size() != polytope.dim()) {
    throw InputError("objective has wrong length");
  }
  // Shift x = theta - delta so the bound becomes x >= 0.
  const double delta = polytope.delta();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(polytope.dim());
  const Eigen::VectorXd rhs =
      polytope.rhs() - delta * (polytope.equality() * ones);
  BestResponse br;
  br.certificate = SolveStandardFormLp(polytope.equality(), rhs, g);
  if (br.certificate.status != LpStatus::kOptimal) {
    throw EmptyShrunkPolytope(polytope.player(), delta, polytope.max_floor());
  }
  if (br.certificate.duality_gap > 1e-9 ||
      br.certificate.dual_infeasibility > 1e-9) {
    throw NumericalError("best-response LP certificate failed",
                         std::max(br.certificate.duality_gap,
                                  br.certificate.dual_infeasibility));
  }
  br.vertex = br.certificate.x + delta * ones;
  br.value = g.dot(br.vertex);
  return br;
}

double NiGap(const Game& game, const Profile& rho,
             const std::vector<OccupationPolytope>& polytopes) {
  double gap = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    const Eigen::VectorXd v = ExactGradient(game, rho, i);
    gap += BestResponseValue(polytopes[i], v).value - rho[i].dot(v);
  }
  return gap;
}

double AveragedNiGap(const Game& game, const std::vector<Profile>& trajectory,
                     const std::vector<double>& weights,
                     const std::vector<OccupationPolytope>& polytopes) {
  if (trajectory.empty() || trajectory.size() != weights.size()) {
    throw InputError("need one weight per trajectory element");
  }
  double w = 0.0;
  for (double x : weights) w += x;
  if (!(w > 0.0)) throw InputError("weights must have a positive sum");
  double gap = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    Eigen::VectorXd averaged = Eigen::VectorXd::Zero(game.chain(i).dim());
    double realized = 0.0;
    for (std::size_t l = 0; l < trajectory.size(); ++l) {
      const Eigen::VectorXd v = ExactGradient(game, trajectory[l], i);
      averaged += (weights[l] / w) * v;
      realized += (weights[l] / w) * trajectory[l][i].dot(v);
    }
    gap += BestResponseValue(polytopes[i], averaged).value - realized;
  }
  return gap;
}

double StableResidual(const Game& game, const std::vector<Profile>& trajectory,
                      const std::vector<double>& weights,
                      const Profile& rho_star) {
  if (trajectory.empty() || trajectory.size() != weights.size()) {
    throw InputError("need one weight per trajectory element");
  }
  double w = 0.0;
  for (double x : weights) w += x;
  if (!(w > 0.0)) throw InputError("weights must have a positive sum");
  double total = 0.0;
  for (std::size_t l = 0; l < trajectory.size(); ++l) {
    for (int i = 0; i < game.num_players(); ++i) {
      const Eigen::VectorXd v = ExactGradient(game, trajectory[l], i);
      total += (weights[l] / w) * v.dot(rho_star[i] - trajectory[l][i]);
    }
  }
  return total;
}

std::vector<BiasEntry> EstimatorBiasReport(const Game& game,
                                           const std::vector<Policy>& policies,
                                           const std::vector<long long>& burn_ins,
                                           long long batches, double tau,
                                           std::uint64_t seed) {
  if (batches < 1) throw InputError("bias report needs at least one batch");
  const int n = game.num_players();
  Profile rho;
  for (int i = 0; i < n; ++i) {
    rho.push_back(OccupationFromPolicy(game.chain(i), policies[i]).values);
  }
  std::vector<Eigen::VectorXd> exact;
  for (int i = 0; i < n; ++i) exact.push_back(ExactGradient(game, rho, i));

  std::vector<BiasEntry> report;
  SimulationState sim = SimulationState::Start(game, seed);
  for (long long d : burn_ins) {
    BatchOptions options;
    options.burn_in = d;
    std::vector<Eigen::VectorXd> sum, sum_sq;
    for (int i = 0; i < n; ++i) {
      sum.push_back(Eigen::VectorXd::Zero(game.chain(i).dim()));
      sum_sq.push_back(Eigen::VectorXd::Zero(game.chain(i).dim()));
    }
    for (long long b = 0; b < batches; ++b) {
      const BatchResult batch = RunBatch(game, policies, options, sim);
      for (int i = 0; i < n; ++i) {
        sum[i] += batch.estimates[i];
        sum_sq[i] += batch.estimates[i].cwiseAbs2();
      }
    }
    const double count = static_cast<double>(batches);
    for (int i = 0; i < n; ++i) {
      for (int x = 0; x < game.chain(i).dim(); ++x) {
        BiasEntry e;
        e.burn_in = d;
        e.player = i;
        e.coordinate = x;
        e.mean = sum[i](x) / count;
        e.exact = exact[i](x);
        const double var =
            std::max(0.0, sum_sq[i](x) / count - e.mean * e.mean);
        e.standard_error =
            batches > 1 ? std::sqrt(var * count / (count - 1.0) / count) : 0.0;
        e.bound = std::exp(-static_cast<double>(d) / tau) + 3.0 * e.standard_error;
        e.violated = std::abs(e.bias()) > e.bound;
        report.push_back(e);
      }
    }
  }
  return report;
}

std::optional<double> CheckConstantSum(const Game& game) {
  const auto* table = dynamic_cast<const TabularReward*>(&game.reward());
  if (!table) throw InputError("constant-sum check needs a tabular game");
  const std::size_t joint = table->tables().front().size();
  std::optional<double> constant;
  for (std::size_t x = 0; x < joint; ++x) {
    double total = 0.0;
    for (int i = 0; i < game.num_players(); ++i) total += table->At(i, x);
    if (!constant) {
      constant = total;
    } else if (std::abs(total - *constant) > 1e-9) {
      return std::nullopt;
    }
  }
  return constant;
}

}  // namespace occgame
