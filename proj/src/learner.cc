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

#include "occgame/learner.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <utility>

namespace occgame {
namespace {

constexpr double kPolicyFloor = 1e-12;

std::vector<double> ToStd(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd ToEigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

int MaxStates(const Game& game) {
  int m = 1;
  for (const auto& c : game.chains()) m = std::max(m, c.num_states());
  return m;
}

}  // namespace

double StepSize(const Schedule& schedule, long long ell) {
  if (ell < 1) throw InputError("step index must be >= 1");
  const double l = static_cast<double>(ell);
  switch (schedule.kind) {
    case Schedule::Kind::kInversePower:
      return std::pow(l, -schedule.param);
    case Schedule::Kind::kTheorem5:
      return std::pow(l, -0.5 - schedule.param);
    case Schedule::Kind::kScaledInverse:
      return schedule.param / l;
  }
  return 0.0;
}

double StepSizeSum(const Schedule& schedule, long long k) {
  double w = 0.0;
  for (long long l = 1; l <= k; ++l) w += StepSize(schedule, l);
  return w;
}

SimulationState SimulationState::Start(const Game& game, std::uint64_t seed) {
  SimulationState sim;
  sim.joint_state.assign(game.num_players(), 0);
  sim.streams = Streams::FromSeed(seed, game.num_players());
  return sim;
}

BatchResult RunBatch(const Game& game, const std::vector<Policy>& policies,
                     const BatchOptions& options, SimulationState& sim) {
  const int n = game.num_players();
  if (static_cast<int>(policies.size()) != n) {
    throw InputError("need one policy per player");
  }
  if (options.burn_in < 1) throw InputError("burn-in d must be >= 1");
  for (int i = 0; i < n; ++i) {
    const auto& c = game.chain(i);
    if (policies[i].num_states != c.num_states() ||
        policies[i].num_actions != c.num_actions()) {
      throw InputError("policy shape does not match chain of player " +
                       std::to_string(i));
    }
    for (double p : policies[i].prob) {
      if (!(p > 0.0)) {
        throw InputError("batch policies must be strictly positive");
      }
    }
  }

  BatchResult batch;
  batch.start = sim.time;
  batch.reward_sum.assign(n, 0.0);
  batch.sampling_reward_sum.assign(n, 0.0);
  batch.uncovered_fraction.assign(n, 0.0);
  std::vector<std::vector<char>> visited(n);
  std::vector<int> remaining(n);
  for (int i = 0; i < n; ++i) {
    batch.estimates.push_back(Eigen::VectorXd::Zero(game.chain(i).dim()));
    visited[i].assign(game.chain(i).num_states(), 0);
    remaining[i] = game.chain(i).num_states();
  }
  int players_left = n;

  std::vector<int> actions(n);
  std::vector<int>& state = sim.joint_state;
  for (long long offset = 0;; ++offset) {
    for (int i = 0; i < n; ++i) {
      actions[i] = SampleAction(policies[i], state[i], sim.streams.player[i]);
    }
    const bool sampling = offset >= options.burn_in;
    for (int i = 0; i < n; ++i) {
      const double r = game.Reward(state, actions, i);
      batch.reward_sum[i] += r;
      if (!sampling) continue;
      batch.sampling_reward_sum[i] += r;
      const int s = state[i];
      if (remaining[i] > 0 && !visited[i][s]) {
        visited[i][s] = 1;
        const int na = game.chain(i).num_actions();
        batch.estimates[i](s * na + actions[i]) +=
            (r - options.reward_shift) / policies[i](s, actions[i]);
        if (--remaining[i] == 0) --players_left;
      }
    }
    if (sampling) ++batch.sampling_steps;
    for (int i = 0; i < n; ++i) {
      state[i] = game.chain(i).Sample(state[i], actions[i],
                                      sim.streams.player[i]);
    }
    batch.end = sim.time;
    ++sim.time;

    if (options.fixed_length > 0) {
      if (batch.sampling_steps >= options.fixed_length) break;
    } else {
      if (players_left == 0) break;
      if (options.cap > 0 && batch.sampling_steps >= options.cap) {
        for (int i = 0; i < n; ++i) {
          batch.uncovered_fraction[i] =
              static_cast<double>(remaining[i]) / game.chain(i).num_states();
        }
        throw BatchCapExceeded(options.cap, std::move(batch));
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    batch.uncovered_fraction[i] =
        static_cast<double>(remaining[i]) / game.chain(i).num_states();
  }
  return batch;
}

Policy IteratePolicy(const OccupationMeasure& rho, bool* floored) {
  Policy policy = PolicyFromOccupation(rho).policy;
  bool any = false;
  for (int s = 0; s < policy.num_states; ++s) {
    bool row_floored = false;
    for (int a = 0; a < policy.num_actions; ++a) {
      if (policy(s, a) < kPolicyFloor) {
        policy(s, a) = kPolicyFloor;
        row_floored = true;
      }
    }
    if (!row_floored) continue;
    any = true;
    double total = 0.0;
    for (int a = 0; a < policy.num_actions; ++a) total += policy(s, a);
    for (int a = 0; a < policy.num_actions; ++a) policy(s, a) /= total;
  }
  if (floored) *floored = any;
  return policy;
}

void DaUpdate(PlayerIterate& player, const Eigen::VectorXd& estimate,
              double eta, const OccupationPolytope& polytope,
              const Regularizer& reg) {
  player.score += eta * estimate;
  const Eigen::VectorXd previous = player.rho.values;
  player.rho.values = DaArgmax(polytope, player.score, reg, &previous).point;
  player.policy = IteratePolicy(player.rho, &player.floored);
}

void MdUpdate(PlayerIterate& player, const Eigen::VectorXd& estimate,
              double eta, const OccupationPolytope& polytope) {
  player.score += eta * estimate;
  const Eigen::VectorXd half = KlSimplexStep(player.rho.values, eta * estimate);
  player.rho.values = KlProject(polytope, half).point;
  player.policy = IteratePolicy(player.rho, &player.floored);
}

long long DefaultBatchCap(const Game& game, double tau) {
  return static_cast<long long>(
      std::ceil(50.0 * std::max(1.0, tau) * MaxStates(game)));
}

long long AutoBurnIn(const Game& game, double tau, double epsilon) {
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  double total = 0.0;
  for (const auto& c : game.chains()) total += c.dim();
  const double d =
      std::ceil(tau * std::log(6.0 * game.num_players() / epsilon * total));
  return std::max(1LL, static_cast<long long>(d));
}

long long AutoFixedLength(const Game& game, double tau, double factor) {
  const double m = MaxStates(game);
  const double len = std::ceil(factor * tau * m * std::log(std::max(m, 2.0)));
  return std::max(1LL, static_cast<long long>(len));
}

std::vector<OccupationPolytope> PlayerPolytopes(
    const Game& game, const std::vector<double>& delta) {
  const int n = game.num_players();
  if (delta.size() != 1 && static_cast<int>(delta.size()) != n) {
    throw InputError("need one delta per player (or a single shared one)");
  }
  std::vector<OccupationPolytope> out;
  for (int i = 0; i < n; ++i) {
    const OccupationPolytope full = BuildPolytope(game.chain(i), i);
    out.push_back(Shrink(full, delta.size() == 1 ? delta[0] : delta[i]));
  }
  return out;
}

LearnerState InitLearner(const Game& game, const RunOptions& options,
                         const std::vector<OccupationPolytope>& polytopes) {
  LearnerState state;
  state.sim = SimulationState::Start(game, options.seed);
  for (int i = 0; i < game.num_players(); ++i) {
    const auto& chain = game.chain(i);
    PlayerIterate player;
    player.score = Eigen::VectorXd::Zero(chain.dim());
    player.rho = {chain.num_states(), chain.num_actions(),
                  EuclideanProject(polytopes[i],
                                   Eigen::VectorXd::Constant(
                                       chain.dim(), 1.0 / chain.dim()))};
    player.policy = IteratePolicy(player.rho, &player.floored);
    state.players.push_back(std::move(player));
    state.average.push_back(Eigen::VectorXd::Zero(chain.dim()));
  }
  return state;
}

EpisodeRecord RunEpisode(const Game& game, const RunOptions& options,
                         const std::vector<OccupationPolytope>& polytopes,
                         LearnerState& state) {
  const int n = game.num_players();
  const long long ell = state.episode + 1;
  const double eta = StepSize(options.schedule, ell);
  const bool mirror = options.algorithm == Algorithm::kMirrorDescent;

  std::vector<Policy> policies;
  for (const auto& p : state.players) policies.push_back(p.policy);
  BatchOptions batch_options;
  batch_options.burn_in = options.burn_in;
  batch_options.cap = options.batch_cap > 0
                          ? options.batch_cap
                          : DefaultBatchCap(game, options.tau);
  batch_options.fixed_length = options.fixed_length;
  batch_options.reward_shift = mirror ? 1.0 : 0.0;
  BatchResult batch = RunBatch(game, policies, batch_options, state.sim);

  EpisodeRecord record;
  record.episode = ell;
  record.start = batch.start;
  record.next_start = batch.end + 1;
  record.eta = eta;
  record.uncovered_fraction = batch.uncovered_fraction;
  for (int i = 0; i < n; ++i) {
    record.mean_reward.push_back(batch.reward_sum[i] / batch.length());
    record.mean_reward_sampling.push_back(
        batch.sampling_steps > 0
            ? batch.sampling_reward_sum[i] / batch.sampling_steps
            : 0.0);
  }

  // The iterate played in this episode enters the running average.
  state.weight_sum += eta;
  for (int i = 0; i < n; ++i) {
    state.average[i] += (eta / state.weight_sum) *
                        (state.players[i].rho.values - state.average[i]);
  }

  auto update = [&](int i) {
    if (mirror) {
      const OccupationPolytope full = Shrink(polytopes[i], 0.0);
      MdUpdate(state.players[i], batch.estimates[i], eta, full);
    } else {
      DaUpdate(state.players[i], batch.estimates[i], eta, polytopes[i],
               options.regularizer);
    }
  };
  if (options.threads > 1 && n > 1) {
    std::vector<std::future<void>> jobs;
    for (int i = 0; i < n; ++i) {
      jobs.push_back(std::async(std::launch::async, update, i));
    }
    for (auto& j : jobs) j.get();
  } else {
    for (int i = 0; i < n; ++i) update(i);
  }
  state.episode = ell;
  if (options.keep_estimates) record.estimates = std::move(batch.estimates);
  return record;
}

TrajectoryLog Run(const Game& game, const RunOptions& options,
                  const EpisodeCallback& on_episode) {
  const auto polytopes = PlayerPolytopes(game, options.delta);
  TrajectoryLog log;
  log.final_state = InitLearner(game, options, polytopes);
  LearnerState& state = log.final_state;
  for (long long k = 0; k < options.episodes; ++k) {
    if (options.snapshot_every > 0 &&
        (state.episode + 1) % options.snapshot_every == 0) {
      std::vector<Eigen::VectorXd> iterate;
      for (const auto& p : state.players) iterate.push_back(p.rho.values);
      log.snapshots.emplace_back(state.episode + 1, std::move(iterate));
    }
    try {
      log.episodes.push_back(RunEpisode(game, options, polytopes, state));
    } catch (const BatchCapExceeded& e) {
      log.aborted = true;
      log.abort_reason = std::string(e.what()) + " in episode " +
                         std::to_string(state.episode + 1);
      break;
    }
    if (on_episode) on_episode(state, log.episodes.back());
  }
  return log;
}

nlohmann::json CheckpointToJson(const LearnerState& state,
                                const std::string& game_hash) {
  nlohmann::json players = nlohmann::json::array();
  for (std::size_t i = 0; i < state.players.size(); ++i) {
    const auto& p = state.players[i];
    players.push_back({{"score", ToStd(p.score)},
                       {"rho", OccupationToJson(p.rho)},
                       {"average", ToStd(state.average[i])}});
  }
  nlohmann::json streams = nlohmann::json::array();
  for (const auto& s : state.sim.streams.player) {
    streams.push_back({{"key", s.key()}, {"counter", s.counter()}});
  }
  return {{"format", "occgame.checkpoint/1"},
          {"game_hash", game_hash},
          {"episode", state.episode},
          {"time", state.sim.time},
          {"joint_state", state.sim.joint_state},
          {"weight_sum", state.weight_sum},
          {"streams", streams},
          {"nature", {{"key", state.sim.streams.nature.key()},
                      {"counter", state.sim.streams.nature.counter()}}},
          {"players", players}};
}

LearnerState CheckpointFromJson(const nlohmann::json& j,
                                const std::string& expected_game_hash) {
  try {
    const std::string hash = j.at("game_hash").get<std::string>();
    if (hash != expected_game_hash) {
      throw InputError("checkpoint was written for game " + hash +
                       " but the configured game hashes to " +
                       expected_game_hash);
    }
    LearnerState state;
    state.episode = j.at("episode").get<long long>();
    state.sim.time = j.at("time").get<long long>();
    state.sim.joint_state = j.at("joint_state").get<std::vector<int>>();
    state.weight_sum = j.at("weight_sum").get<double>();
    for (const auto& s : j.at("streams")) {
      state.sim.streams.player.emplace_back(s.at("key").get<std::uint64_t>(),
                                            s.at("counter").get<std::uint64_t>());
    }
    state.sim.streams.nature =
        Stream(j.at("nature").at("key").get<std::uint64_t>(),
               j.at("nature").at("counter").get<std::uint64_t>());
    for (const auto& p : j.at("players")) {
      PlayerIterate player;
      player.score = ToEigen(p.at("score").get<std::vector<double>>());
      player.rho = OccupationFromJson(p.at("rho"));
      player.policy = IteratePolicy(player.rho, &player.floored);
      state.players.push_back(std::move(player));
      state.average.push_back(ToEigen(p.at("average").get<std::vector<double>>()));
    }
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace occgame
