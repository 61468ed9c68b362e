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

#ifndef OCCGAME_LEARNER_H_
#define OCCGAME_LEARNER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "occgame/errors.h"
#include "occgame/game.h"
#include "occgame/occupancy.h"
#include "occgame/projection.h"
#include "occgame/rng.h"

namespace occgame {

// Step sizes eta_l, l >= 1.
struct Schedule {
  enum class Kind {
    kInversePower,   // l^-beta, beta in (1/2, 1]
    kTheorem5,       // l^-(1/2 + beta), beta > 0
    kScaledInverse,  // c / l
  };

  Kind kind = Kind::kInversePower;
  double param = 1.0;

  static Schedule InversePower(double beta) {
    return {Kind::kInversePower, beta};
  }
  static Schedule Theorem5(double beta) { return {Kind::kTheorem5, beta}; }
  static Schedule ScaledInverse(double c) {
    return {Kind::kScaledInverse, c};
  }
};

double StepSize(const Schedule& schedule, long long ell);

// Sum of eta_1..eta_k.
double StepSizeSum(const Schedule& schedule, long long k);

enum class Algorithm { kDualAveraging, kMirrorDescent };

// Joint simulator position: the current joint state, the global clock and
// the random streams.
struct SimulationState {
  std::vector<int> joint_state;
  long long time = 0;
  Streams streams;

  static SimulationState Start(const Game& game, std::uint64_t seed);
};

struct BatchOptions {
  long long burn_in = 1;
  // Maximum number of post-burn-in steps in cover mode.
  long long cap = 0;
  // If positive, the sampling window has exactly this many steps and uncovered
  // states are logged instead of waited for.
  long long fixed_length = 0;
  // Subtracted from every reward entering the estimator (1 for MD).
  double reward_shift = 0.0;
};

struct BatchResult {
  // Per-player importance-weighted reward vectors.
  std::vector<Eigen::VectorXd> estimates;
  long long start = 0;
  // Last time index of the batch (inclusive).
  long long end = 0;
  std::vector<double> reward_sum;
  // Rewards inside the sampling window only.
  std::vector<double> sampling_reward_sum;
  long long sampling_steps = 0;
  // Fraction of each player's states left unvisited (fixed-length mode).
  std::vector<double> uncovered_fraction;

  long long length() const { return end - start + 1; }
};

// The post-burn-in cover time exceeded the cap. Carries the partial batch.
class BatchCapExceeded : public Error {
 public:
  BatchCapExceeded(long long cap, BatchResult partial)
      : Error("batch exceeded cap of " + std::to_string(cap) +
              " post-burn-in steps"),
        partial_(std::move(partial)) {}

  const BatchResult& partial() const { return partial_; }

 private:
  BatchResult partial_;
};

// Plays one batch from `sim`. After `burn_in` steps each player records, at
// the first visit to each of its states, r / pi(a|s) in coordinate (s, a).
// The batch ends once every player has covered its state space.
BatchResult RunBatch(const Game& game, const std::vector<Policy>& policies,
                     const BatchOptions& options, SimulationState& sim);

struct PlayerIterate {
  Eigen::VectorXd score;
  OccupationMeasure rho;
  Policy policy;
  // Set when policy rows had to be floored to stay strictly positive.
  bool floored = false;
};

// Y <- Y + eta R, rho <- argmax <rho, Y> - h(rho), pi <- pi(rho).
void DaUpdate(PlayerIterate& player, const Eigen::VectorXd& estimate,
              double eta, const OccupationPolytope& polytope,
              const Regularizer& reg);

// Entropic step on the simplex followed by KL projection on the polytope.
void MdUpdate(PlayerIterate& player, const Eigen::VectorXd& estimate,
              double eta, const OccupationPolytope& polytope);

// Policy of an iterate, with rows floored at 1e-12 when needed.
Policy IteratePolicy(const OccupationMeasure& rho, bool* floored = nullptr);

struct RunOptions {
  Algorithm algorithm = Algorithm::kDualAveraging;
  Schedule schedule;
  Regularizer regularizer = Regularizer::Quadratic(0.5);
  long long burn_in = 1;
  // One entry per player, or a single entry shared by all.
  std::vector<double> delta;
  long long episodes = 0;
  std::uint64_t seed = 0;
  // Mixing-time estimate; used for the default batch cap.
  double tau = 1.0;
  // 0 means 50 * tau * max_i |S_i|.
  long long batch_cap = 0;
  long long fixed_length = 0;
  // Keep a copy of every `snapshot_every`-th iterate (0 disables).
  long long snapshot_every = 0;
  bool keep_estimates = false;
  int threads = 1;
};

long long DefaultBatchCap(const Game& game, double tau);

// ceil(tau * ln((6 n / eps) * sum_i |A_i||S_i|)).
long long AutoBurnIn(const Game& game, double tau, double epsilon);

// ceil(factor * tau * m * ln(m)) with m = max_i |S_i| (at least 1).
long long AutoFixedLength(const Game& game, double tau, double factor);

struct LearnerState {
  std::vector<PlayerIterate> players;
  SimulationState sim;
  // Completed episodes.
  long long episode = 0;
  // w^k and the eta-weighted average of the played iterates.
  double weight_sum = 0.0;
  std::vector<Eigen::VectorXd> average;
};

struct EpisodeRecord {
  long long episode = 0;
  long long start = 0;
  // Start of the next batch.
  long long next_start = 0;
  double eta = 0.0;
  std::vector<double> mean_reward;
  std::vector<double> mean_reward_sampling;
  std::vector<double> uncovered_fraction;
  std::vector<Eigen::VectorXd> estimates;

  long long batch_length() const { return next_start - start; }
};

// Shrunk polytopes for every player; throws EmptyShrunkPolytope.
std::vector<OccupationPolytope> PlayerPolytopes(const Game& game,
                                                const std::vector<double>& delta);

// rho^1 is the projection of the uniform vector onto each shrunk polytope.
LearnerState InitLearner(const Game& game, const RunOptions& options,
                         const std::vector<OccupationPolytope>& polytopes);

// Plays one episode and applies the update. `polytopes` must come from
// PlayerPolytopes with the same deltas.
EpisodeRecord RunEpisode(const Game& game, const RunOptions& options,
                         const std::vector<OccupationPolytope>& polytopes,
                         LearnerState& state);

struct TrajectoryLog {
  std::vector<EpisodeRecord> episodes;
  // (episode index, per-player occupation vectors played in that episode).
  std::vector<std::pair<long long, std::vector<Eigen::VectorXd>>> snapshots;
  LearnerState final_state;
  bool aborted = false;
  std::string abort_reason;
};

using EpisodeCallback =
    std::function<void(const LearnerState&, const EpisodeRecord&)>;

TrajectoryLog Run(const Game& game, const RunOptions& options,
                  const EpisodeCallback& on_episode = nullptr);

nlohmann::json CheckpointToJson(const LearnerState& state,
                                const std::string& game_hash);
LearnerState CheckpointFromJson(const nlohmann::json& j,
                                const std::string& expected_game_hash);

}  // namespace occgame

#endif  // OCCGAME_LEARNER_H_
