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

// Small hand-built chains and games shared by the tests.

#ifndef OCCGAME_TESTS_FIXTURES_H_
#define OCCGAME_TESTS_FIXTURES_H_

#include <memory>
#include <vector>

#include "occgame/game.h"
#include "occgame/rng.h"

namespace occgame::testing {

// Every action keeps the state where it is.
inline PlayerChain IdentityChain(int ns, int na) {
  std::vector<double> t(ns * na * ns, 0.0);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) t[(s * na + a) * ns + s] = 1.0;
  }
  return PlayerChain(ns, na, t);
}

// Every row is uniform over the states.
inline PlayerChain UniformChain(int ns, int na) {
  return PlayerChain(ns, na, std::vector<double>(ns * na * ns, 1.0 / ns));
}

// Two states; every action flips the state with probability p.
inline PlayerChain FlipChain(int na, double p) {
  std::vector<double> t;
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < na; ++a) {
      t.push_back(s == 0 ? 1.0 - p : p);
      t.push_back(s == 0 ? p : 1.0 - p);
    }
  }
  return PlayerChain(2, na, t);
}

// Random chain whose entries are all at least `floor`.
inline PlayerChain RandomChain(int ns, int na, Stream& stream,
                               double floor = 0.02) {
  std::vector<double> t(ns * na * ns);
  for (int row = 0; row < ns * na; ++row) {
    double total = 0.0;
    for (int k = 0; k < ns; ++k) {
      t[row * ns + k] = -std::log1p(-stream.Uniform());
      total += t[row * ns + k];
    }
    for (int k = 0; k < ns; ++k) {
      t[row * ns + k] = floor + (1.0 - ns * floor) * t[row * ns + k] / total;
    }
  }
  return PlayerChain(ns, na, t);
}

// Game over `chains` with explicit joint reward tables.
inline Game TabularGame(std::vector<PlayerChain> chains,
                        std::vector<std::vector<double>> tables) {
  std::vector<int> ss, as;
  for (const auto& c : chains) {
    ss.push_back(c.num_states());
    as.push_back(c.num_actions());
  }
  auto reward = std::make_shared<TabularReward>(ss, as, std::move(tables));
  return Game(std::move(chains), reward);
}

// Every player's reward is the constant c_i everywhere.
inline Game ConstantGame(std::vector<PlayerChain> chains,
                         const std::vector<double>& c) {
  std::size_t joint = 1;
  for (const auto& ch : chains) joint *= ch.dim();
  std::vector<std::vector<double>> tables;
  for (double v : c) tables.emplace_back(joint, v);
  return TabularGame(std::move(chains), std::move(tables));
}

// Matching pennies on one state and two actions, rescaled to [0, 1]:
// player 0 wins (reward 1) when the actions match.
inline Game MatchingPennies() {
  std::vector<double> r0 = {1, 0, 0, 1};
  std::vector<double> r1 = {0, 1, 1, 0};
  return TabularGame({UniformChain(1, 2), UniformChain(1, 2)}, {r0, r1});
}

}  // namespace occgame::testing

#endif  // OCCGAME_TESTS_FIXTURES_H_
