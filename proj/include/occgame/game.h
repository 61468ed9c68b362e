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

#ifndef OCCGAME_GAME_H_
#define OCCGAME_GAME_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "occgame/rng.h"

namespace occgame {

// Default guard on the number of joint (state, action) profiles that exact
// oracles are allowed to enumerate.
inline constexpr double kDefaultEnumerationCap = 1e7;

// One player's private controlled Markov chain. Transition probabilities are
// stored row-major as [s][a][s'].
class PlayerChain {
 public:
  PlayerChain(int num_states, int num_actions, std::vector<double> transition);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  // Number of (state, action) pairs; the dimension of occupation measures.
  int dim() const { return num_states_ * num_actions_; }

  double Prob(int s, int a, int next) const {
    return transition_[(s * num_actions_ + a) * num_states_ + next];
  }
  std::span<const double> Row(int s, int a) const {
    return {transition_.data() + (s * num_actions_ + a) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }
  const std::vector<double>& transition() const { return transition_; }

  // Draws s' ~ P(.|s,a) by inverse CDF on one uniform from `stream`.
  int Sample(int s, int a, Stream& stream) const;

 private:
  int num_states_;
  int num_actions_;
  std::vector<double> transition_;
};

// Stationary policy pi(a|s), row-major [s][a].
struct Policy {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> prob;

  double operator()(int s, int a) const { return prob[s * num_actions + a]; }
  double& operator()(int s, int a) { return prob[s * num_actions + a]; }

  static Policy Uniform(int num_states, int num_actions);
};

// Draws an action from pi(.|state). Throws InputError if the row does not
// sum to one within 1e-9 or has a negative entry.
int SampleAction(const Policy& policy, int state, Stream& stream);

// Reward r_i(s, a) for joint state s and joint action a. Values lie in [0,1].
class RewardOracle {
 public:
  virtual ~RewardOracle() = default;

  virtual double Reward(std::span<const int> states,
                        std::span<const int> actions, int player) const = 0;
  // True when the full joint reward tensor is stored.
  virtual bool is_tabular() const = 0;
  virtual nlohmann::json ToJson() const = 0;
};

// Joint reward tensors, one per player. The joint index is mixed-radix over
// players (player 0 most significant) of the per-player pair index
// s_j * |A_j| + a_j.
class TabularReward : public RewardOracle {
 public:
  TabularReward(std::vector<int> state_sizes, std::vector<int> action_sizes,
                std::vector<std::vector<double>> tables);

  double Reward(std::span<const int> states, std::span<const int> actions,
                int player) const override;
  bool is_tabular() const override { return true; }
  nlohmann::json ToJson() const override;

  double At(int player, std::size_t joint_index) const {
    return tables_[player][joint_index];
  }
  const std::vector<int>& state_sizes() const { return state_sizes_; }
  const std::vector<int>& action_sizes() const { return action_sizes_; }
  const std::vector<std::vector<double>>& tables() const { return tables_; }

  // Joint index from per-player pair indices s_j * |A_j| + a_j.
  std::size_t JointIndex(std::span<const int> pair_indices) const;

 private:
  std::vector<int> state_sizes_;
  std::vector<int> action_sizes_;
  std::vector<std::vector<double>> tables_;
};

// Energy-market reward: u_i(a_i) minus the price p = lambda * total demand
// times own demand, clamped at zero and divided by the maximum utility.
class SmartGridRewardOracle : public RewardOracle {
 public:
  SmartGridRewardOracle(int capacity, double lambda,
                        std::vector<double> utility_exponents);

  double Reward(std::span<const int> states, std::span<const int> actions,
                int player) const override;
  bool is_tabular() const override { return false; }
  nlohmann::json ToJson() const override;

 private:
  int capacity_;
  double lambda_;
  std::vector<double> exponents_;
};

// An n-player stochastic game with independent chains. Immutable once built.
class Game {
 public:
  Game(std::vector<PlayerChain> chains,
       std::shared_ptr<const RewardOracle> reward, std::uint64_t seed = 0,
       nlohmann::json generator = nlohmann::json::object());

  int num_players() const { return static_cast<int>(chains_.size()); }
  const PlayerChain& chain(int i) const { return chains_[i]; }
  const std::vector<PlayerChain>& chains() const { return chains_; }
  const RewardOracle& reward() const { return *reward_; }
  std::shared_ptr<const RewardOracle> reward_ptr() const { return reward_; }
  std::uint64_t seed() const { return seed_; }
  // Generator kind and parameters ({"kind": ..., ...}); empty for hand-built.
  const nlohmann::json& generator() const { return generator_; }

  double enumeration_cap() const { return enumeration_cap_; }
  void set_enumeration_cap(double cap) { enumeration_cap_ = cap; }

  // prod_i |S_i||A_i| as a double (may exceed any integer type).
  double JointSize() const;
  // Exact oracles are allowed when the joint size is under the cap.
  bool Enumerable() const { return JointSize() <= enumeration_cap_; }

  double Reward(std::span<const int> states, std::span<const int> actions,
                int player) const {
    return reward_->Reward(states, actions, player);
  }

 private:
  std::vector<PlayerChain> chains_;
  std::shared_ptr<const RewardOracle> reward_;
  std::uint64_t seed_;
  nlohmann::json generator_;
  double enumeration_cap_ = kDefaultEnumerationCap;
};

// Advances every player's chain by one step. Player i's next state is drawn
// from P_i(.|s_i,a_i) using only streams[i].
std::vector<int> Step(const Game& game, std::span<const int> joint_state,
                      std::span<const int> joint_action,
                      std::span<Stream> streams);

// Distribution of s' = min(C, g + (s - a)^+) with g ~ Unif{0..harvest-1}.
std::vector<double> SmartGridTransition(int capacity, int harvest, int s,
                                        int a);

// Normalized smart-grid reward of `player`. Exponent 2 gives u(a) = a^2.
double SmartGridReward(int capacity, double lambda,
                       std::span<const int> states,
                       std::span<const int> actions, int player,
                       double exponent = 2.0);

// Smart-grid market game with S_i = A_i = {0..C}. `utility_exponents` may be
// empty (all 2) or have one entry per player.
Game SmartGridGame(int num_players, int capacity, std::vector<int> harvest,
                   double lambda,
                   std::vector<double> utility_exponents = {});

// Random tabular game. Every transition entry is at least 0.01 so each
// induced chain is irreducible and aperiodic.
Game RandomGame(int num_players, const std::vector<int>& state_sizes,
                const std::vector<int>& action_sizes, std::uint64_t seed);

// Two-player constant-sum game: r_2 = 1 - r_1.
Game ZeroSumTwoPlayer(const std::vector<int>& state_sizes,
                      const std::vector<int>& action_sizes,
                      std::uint64_t seed);

nlohmann::json GameToJson(const Game& game);
Game GameFromJson(const nlohmann::json& j);

// Stable 64-bit FNV-1a hash of the canonical JSON form, as 16 hex digits.
std::string GameHash(const Game& game);

}  // namespace occgame

#endif  // OCCGAME_GAME_H_
