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

#include "occgame/game.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <utility>

#include "occgame/errors.h"

namespace occgame {
namespace {

constexpr double kRowTolerance = 1e-12;
constexpr double kRandomFloor = 0.01;

// Row of `size` entries, each >= floor, summing to one.
std::vector<double> FlooredSimplexRow(int size, Stream& stream) {
  std::vector<double> row(size, 1.0);
  if (size == 1) return row;
  double total = 0.0;
  for (double& x : row) {
    x = -std::log1p(-stream.Uniform());  // Exp(1), i.e. flat Dirichlet.
    total += x;
  }
  const double free_mass = 1.0 - kRandomFloor * size;
  for (double& x : row) x = kRandomFloor + free_mass * x / total;
  // Put the rounding residue on the largest entry.
  const double sum = std::accumulate(row.begin(), row.end(), 0.0);
  *std::max_element(row.begin(), row.end()) += 1.0 - sum;
  return row;
}

void CheckSizes(const std::vector<int>& sizes, const char* what) {
  for (int s : sizes) {
    if (s < 1) throw InputError(std::string(what) + " sizes must be >= 1");
  }
}

}  // namespace

PlayerChain::PlayerChain(int num_states, int num_actions,
                         std::vector<double> transition)
    : num_states_(num_states),
      num_actions_(num_actions),
      transition_(std::move(transition)) {
  if (num_states < 1 || num_actions < 1) {
    throw InputError("a chain needs at least one state and one action");
  }
  if (transition_.size() !=
      static_cast<std::size_t>(num_states) * num_actions * num_states) {
    throw InputError("transition tensor has wrong size");
  }
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      double sum = 0.0;
      for (double p : Row(s, a)) {
        if (!(p >= 0.0)) throw InputError("negative transition probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowTolerance) {
        throw InputError("transition row (" + std::to_string(s) + "," +
                         std::to_string(a) + ") sums to " +
                         std::to_string(sum));
      }
    }
  }
}

int PlayerChain::Sample(int s, int a, Stream& stream) const {
  const auto row = Row(s, a);
  double u = stream.Uniform();
  for (int next = 0; next + 1 < num_states_; ++next) {
    u -= row[next];
    if (u < 0.0) return next;
  }
  // Fall through lands on the last state with positive mass.
  for (int next = num_states_ - 1; next > 0; --next) {
    if (row[next] > 0.0) return next;
  }
  return 0;
}

Policy Policy::Uniform(int num_states, int num_actions) {
  return Policy{num_states, num_actions,
                std::vector<double>(num_states * num_actions,
                                    1.0 / num_actions)};
}

int SampleAction(const Policy& policy, int state, Stream& stream) {
  if (state < 0 || state >= policy.num_states) {
    throw InputError("state index out of range");
  }
  const double* row = policy.prob.data() + state * policy.num_actions;
  double sum = 0.0;
  for (int a = 0; a < policy.num_actions; ++a) {
    if (!(row[a] >= 0.0)) throw InputError("negative action probability");
    sum += row[a];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InputError("policy row " + std::to_string(state) + " sums to " +
                     std::to_string(sum));
  }
  double u = stream.Uniform() * sum;
  for (int a = 0; a + 1 < policy.num_actions; ++a) {
    u -= row[a];
    if (u < 0.0) return a;
  }
  for (int a = policy.num_actions - 1; a > 0; --a) {
    if (row[a] > 0.0) return a;
  }
  return 0;
}

TabularReward::TabularReward(std::vector<int> state_sizes,
                             std::vector<int> action_sizes,
                             std::vector<std::vector<double>> tables)
    : state_sizes_(std::move(state_sizes)),
      action_sizes_(std::move(action_sizes)),
      tables_(std::move(tables)) {
  if (state_sizes_.size() != action_sizes_.size() ||
      tables_.size() != state_sizes_.size()) {
    throw InputError("need one reward table per player");
  }
  std::size_t joint = 1;
  for (std::size_t j = 0; j < state_sizes_.size(); ++j) {
    joint *= static_cast<std::size_t>(state_sizes_[j]) * action_sizes_[j];
  }
  for (const auto& t : tables_) {
    if (t.size() != joint) throw InputError("reward table has wrong size");
    for (double r : t) {
      if (!(r >= 0.0 && r <= 1.0)) {
        throw InputError("tabular reward outside [0,1]");
      }
    }
  }
}

std::size_t TabularReward::JointIndex(
    std::span<const int> pair_indices) const {
  std::size_t index = 0;
  for (std::size_t j = 0; j < state_sizes_.size(); ++j) {
    index = index * (state_sizes_[j] * action_sizes_[j]) + pair_indices[j];
  }
  return index;
}

double TabularReward::Reward(std::span<const int> states,
                             std::span<const int> actions, int player) const {
  std::size_t index = 0;
  for (std::size_t j = 0; j < state_sizes_.size(); ++j) {
    index = index * (state_sizes_[j] * action_sizes_[j]) +
            states[j] * action_sizes_[j] + actions[j];
  }
  return tables_[player][index];
}

nlohmann::json TabularReward::ToJson() const {
  return {{"kind", "tabular"},
          {"state_sizes", state_sizes_},
          {"action_sizes", action_sizes_},
          {"tables", tables_}};
}

SmartGridRewardOracle::SmartGridRewardOracle(
    int capacity, double lambda, std::vector<double> utility_exponents)
    : capacity_(capacity),
      lambda_(lambda),
      exponents_(std::move(utility_exponents)) {}

double SmartGridRewardOracle::Reward(std::span<const int> states,
                                     std::span<const int> actions,
                                     int player) const {
  return SmartGridReward(capacity_, lambda_, states, actions, player,
                         exponents_[player]);
}

nlohmann::json SmartGridRewardOracle::ToJson() const {
  return {{"kind", "smart_grid"},
          {"capacity", capacity_},
          {"lambda", lambda_},
          {"utility_exponents", exponents_}};
}

Game::Game(std::vector<PlayerChain> chains,
           std::shared_ptr<const RewardOracle> reward, std::uint64_t seed,
           nlohmann::json generator)
    : chains_(std::move(chains)),
      reward_(std::move(reward)),
      seed_(seed),
      generator_(std::move(generator)) {
  if (chains_.empty()) throw InputError("a game needs at least one player");
  if (!reward_) throw InputError("a game needs a reward oracle");
}

double Game::JointSize() const {
  double size = 1.0;
  for (const auto& c : chains_) size *= c.dim();
  return size;
}

std::vector<int> Step(const Game& game, std::span<const int> joint_state,
                      std::span<const int> joint_action,
                      std::span<Stream> streams) {
  const int n = game.num_players();
  if (static_cast<int>(joint_state.size()) != n ||
      static_cast<int>(joint_action.size()) != n ||
      static_cast<int>(streams.size()) < n) {
    throw InputError("joint state/action/streams must have one entry per player");
  }
  std::vector<int> next(n);
  for (int i = 0; i < n; ++i) {
    const PlayerChain& c = game.chain(i);
    if (joint_state[i] < 0 || joint_state[i] >= c.num_states() ||
        joint_action[i] < 0 || joint_action[i] >= c.num_actions()) {
      throw InputError("state or action index out of range for player " +
                       std::to_string(i));
    }
    next[i] = c.Sample(joint_state[i], joint_action[i], streams[i]);
  }
  return next;
}

std::vector<double> SmartGridTransition(int capacity, int harvest, int s,
                                        int a) {
  if (capacity < 1 || harvest < 1 || s < 0 || s > capacity || a < 0 ||
      a > capacity) {
    throw InputError("smart-grid transition arguments out of range");
  }
  std::vector<double> row(capacity + 1, 0.0);
  const int leftover = std::max(0, s - a);
  for (int g = 0; g < harvest; ++g) {
    row[std::min(capacity, g + leftover)] += 1.0 / harvest;
  }
  return row;
}

double SmartGridReward(int capacity, double lambda,
                       std::span<const int> states,
                       std::span<const int> actions, int player,
                       double exponent) {
  double total_demand = 0.0;
  for (std::size_t j = 0; j < states.size(); ++j) {
    total_demand += std::max(0, actions[j] - states[j]);
  }
  const double price = lambda * total_demand;
  const double own_demand = std::max(0, actions[player] - states[player]);
  const double utility = std::pow(static_cast<double>(actions[player]), exponent);
  const double raw = std::max(0.0, utility - price * own_demand);
  const double scale = std::pow(static_cast<double>(capacity), exponent);
  return std::min(1.0, raw / scale);
}

Game SmartGridGame(int num_players, int capacity, std::vector<int> harvest,
                   double lambda, std::vector<double> utility_exponents) {
  if (num_players < 1) throw InputError("smart grid needs n >= 1");
  if (capacity < 1) throw InputError("smart grid needs C >= 1");
  if (!(lambda >= 0.0)) throw InputError("smart grid needs lambda >= 0");
  if (harvest.size() == 1 && num_players > 1) {
    harvest.assign(num_players, harvest[0]);
  }
  if (static_cast<int>(harvest.size()) != num_players) {
    throw InputError("need one harvest bound per player");
  }
  CheckSizes(harvest, "harvest");
  if (utility_exponents.empty()) utility_exponents.assign(num_players, 2.0);
  if (static_cast<int>(utility_exponents.size()) != num_players) {
    throw InputError("need one utility exponent per player");
  }
  for (double e : utility_exponents) {
    if (!(e > 0.0)) throw InputError("utility exponents must be positive");
  }
  const int size = capacity + 1;
  std::vector<PlayerChain> chains;
  for (int i = 0; i < num_players; ++i) {
    std::vector<double> transition;
    transition.reserve(size * size * size);
    for (int s = 0; s < size; ++s) {
      for (int a = 0; a < size; ++a) {
        const auto row = SmartGridTransition(capacity, harvest[i], s, a);
        transition.insert(transition.end(), row.begin(), row.end());
      }
    }
    chains.emplace_back(size, size, std::move(transition));
  }
  nlohmann::json generator = {{"kind", "smart_grid"},
                              {"num_players", num_players},
                              {"capacity", capacity},
                              {"harvest", harvest},
                              {"lambda", lambda},
                              {"utility_exponents", utility_exponents}};
  auto reward = std::make_shared<SmartGridRewardOracle>(capacity, lambda,
                                                        utility_exponents);
  return Game(std::move(chains), std::move(reward), 0, std::move(generator));
}

namespace {

std::vector<PlayerChain> RandomChains(const std::vector<int>& state_sizes,
                                      const std::vector<int>& action_sizes,
                                      Stream& stream) {
  std::vector<PlayerChain> chains;
  for (std::size_t i = 0; i < state_sizes.size(); ++i) {
    const int ns = state_sizes[i];
    const int na = action_sizes[i];
    if (ns * kRandomFloor >= 1.0) {
      throw InputError("random chains support at most 99 states");
    }
    std::vector<double> transition;
    for (int sa = 0; sa < ns * na; ++sa) {
      const auto row = FlooredSimplexRow(ns, stream);
      transition.insert(transition.end(), row.begin(), row.end());
    }
    chains.emplace_back(ns, na, std::move(transition));
  }
  return chains;
}

std::size_t JointPairCount(const std::vector<int>& state_sizes,
                           const std::vector<int>& action_sizes) {
  std::size_t joint = 1;
  for (std::size_t i = 0; i < state_sizes.size(); ++i) {
    joint *= static_cast<std::size_t>(state_sizes[i]) * action_sizes[i];
  }
  if (joint > static_cast<std::size_t>(kDefaultEnumerationCap)) {
    throw EnumerationTooLarge(static_cast<double>(joint),
                              kDefaultEnumerationCap);
  }
  return joint;
}

}  // namespace

Game RandomGame(int num_players, const std::vector<int>& state_sizes,
                const std::vector<int>& action_sizes, std::uint64_t seed) {
  if (num_players < 1 ||
      static_cast<int>(state_sizes.size()) != num_players ||
      static_cast<int>(action_sizes.size()) != num_players) {
    throw InputError("random game needs one state and action size per player");
  }
  CheckSizes(state_sizes, "state");
  CheckSizes(action_sizes, "action");
  Stream stream(seed);
  auto chains = RandomChains(state_sizes, action_sizes, stream);
  const std::size_t joint = JointPairCount(state_sizes, action_sizes);
  std::vector<std::vector<double>> tables(num_players,
                                          std::vector<double>(joint));
  for (auto& t : tables) {
    for (double& r : t) r = stream.Uniform();
  }
  auto reward = std::make_shared<TabularReward>(state_sizes, action_sizes,
                                                std::move(tables));
  nlohmann::json generator = {{"kind", "random"},
                              {"state_sizes", state_sizes},
                              {"action_sizes", action_sizes}};
  return Game(std::move(chains), std::move(reward), seed,
              std::move(generator));
}

Game ZeroSumTwoPlayer(const std::vector<int>& state_sizes,
                      const std::vector<int>& action_sizes,
                      std::uint64_t seed) {
  if (state_sizes.size() != 2 || action_sizes.size() != 2) {
    throw InputError("constant-sum game needs exactly two players");
  }
  CheckSizes(state_sizes, "state");
  CheckSizes(action_sizes, "action");
  Stream stream(seed);
  auto chains = RandomChains(state_sizes, action_sizes, stream);
  const std::size_t joint = JointPairCount(state_sizes, action_sizes);
  std::vector<std::vector<double>> tables(2, std::vector<double>(joint));
  for (std::size_t x = 0; x < joint; ++x) {
    tables[0][x] = stream.Uniform();
    tables[1][x] = 1.0 - tables[0][x];
  }
  auto reward = std::make_shared<TabularReward>(state_sizes, action_sizes,
                                                std::move(tables));
  nlohmann::json generator = {{"kind", "zero_sum_two_player"},
                              {"state_sizes", state_sizes},
                              {"action_sizes", action_sizes}};
  return Game(std::move(chains), std::move(reward), seed,
              std::move(generator));
}

nlohmann::json GameToJson(const Game& game) {
  nlohmann::json players = nlohmann::json::array();
  for (const auto& c : game.chains()) {
    players.push_back({{"num_states", c.num_states()},
                       {"num_actions", c.num_actions()},
                       {"transition", c.transition()}});
  }
  return {{"format", "occgame.game/1"},
          {"players", players},
          {"reward", game.reward().ToJson()},
          {"generator", game.generator()},
          {"seed", game.seed()},
          {"enumeration_cap", game.enumeration_cap()}};
}

Game GameFromJson(const nlohmann::json& j) {
  try {
    const auto& reward_json = j.at("reward");
    const std::string kind = reward_json.at("kind").get<std::string>();
    // Procedural games are rebuilt from their generator parameters.
    if (kind == "smart_grid") {
      const auto& g = j.at("generator");
      Game game = SmartGridGame(
          g.at("num_players").get<int>(), g.at("capacity").get<int>(),
          g.at("harvest").get<std::vector<int>>(), g.at("lambda").get<double>(),
          g.value("utility_exponents", std::vector<double>{}));
      game.set_enumeration_cap(j.value("enumeration_cap", kDefaultEnumerationCap));
      return game;
    }
    if (kind != "tabular") throw InputError("unknown reward kind '" + kind + "'");
    std::vector<PlayerChain> chains;
    for (const auto& p : j.at("players")) {
      chains.emplace_back(p.at("num_states").get<int>(),
                          p.at("num_actions").get<int>(),
                          p.at("transition").get<std::vector<double>>());
    }
    auto reward = std::make_shared<TabularReward>(
        reward_json.at("state_sizes").get<std::vector<int>>(),
        reward_json.at("action_sizes").get<std::vector<int>>(),
        reward_json.at("tables").get<std::vector<std::vector<double>>>());
    for (std::size_t i = 0; i < chains.size(); ++i) {
      if (reward->state_sizes()[i] != chains[i].num_states() ||
          reward->action_sizes()[i] != chains[i].num_actions()) {
        throw InputError("reward tensor sizes disagree with chains");
      }
    }
    Game game(std::move(chains), std::move(reward),
              j.value("seed", std::uint64_t{0}),
              j.value("generator", nlohmann::json::object()));
    game.set_enumeration_cap(j.value("enumeration_cap", kDefaultEnumerationCap));
    return game;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed game document: ") + e.what());
  }
}

std::string GameHash(const Game& game) {
  const std::string text = GameToJson(game).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace occgame
