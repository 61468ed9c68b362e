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

#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "fixtures.h"
#include "occgame/errors.h"
#include "occgame/game.h"
#include "occgame/rng.h"

namespace occgame {
namespace {

using testing::FlipChain;
using testing::IdentityChain;
using testing::UniformChain;

// L1 distance between the empirical joint law of two players' states and the
// product of its marginals.
double IndependenceGap(const Game& game, const std::vector<Policy>& policies,
                       long long steps, std::uint64_t seed) {
  const int n0 = game.chain(0).num_states();
  const int n1 = game.chain(1).num_states();
  std::vector<double> joint(n0 * n1, 0.0), m0(n0, 0.0), m1(n1, 0.0);
  Streams streams = Streams::FromSeed(seed, 2);
  std::vector<int> state = {0, 0};
  for (long long t = 0; t < steps; ++t) {
    std::vector<int> action = {
        SampleAction(policies[0], state[0], streams.nature),
        SampleAction(policies[1], state[1], streams.nature)};
    state = Step(game, state, action, streams.player);
    joint[state[0] * n1 + state[1]] += 1.0 / steps;
    m0[state[0]] += 1.0 / steps;
    m1[state[1]] += 1.0 / steps;
  }
  double l1 = 0.0;
  for (int a = 0; a < n0; ++a) {
    for (int b = 0; b < n1; ++b) l1 += std::abs(joint[a * n1 + b] - m0[a] * m1[b]);
  }
  return l1;
}

TEST_CASE("PlayerChain rejects rows that do not sum to one") {
  CHECK_THROWS_AS(PlayerChain(1, 1, {0.5}), InputError);
  CHECK_THROWS_AS(PlayerChain(2, 1, {1.0, 0.0, -0.1, 1.1}), InputError);
  CHECK_THROWS_AS(PlayerChain(2, 1, {1.0}), InputError);
  CHECK_NOTHROW(PlayerChain(2, 1, {0.25, 0.75, 1.0, 0.0}));
}

TEST_CASE("Step on the identity chain keeps every state") {
  Game game = testing::ConstantGame({IdentityChain(3, 2), IdentityChain(2, 2)},
                                    {0.5, 0.5});
  Streams streams = Streams::FromSeed(1, 2);
  for (int s0 = 0; s0 < 3; ++s0) {
    for (int s1 = 0; s1 < 2; ++s1) {
      for (int a = 0; a < 2; ++a) {
        std::vector<int> state = {s0, s1};
        std::vector<int> action = {a, 1 - a};
        CHECK(Step(game, state, action, streams.player) == state);
      }
    }
  }
}

TEST_CASE("Step with single-state chains always returns zero") {
  Game game = testing::ConstantGame({UniformChain(1, 3), UniformChain(1, 2)},
                                    {0.0, 1.0});
  Streams streams = Streams::FromSeed(9, 2);
  for (int t = 0; t < 100; ++t) {
    std::vector<int> action = {t % 3, t % 2};
    CHECK(Step(game, std::vector<int>{0, 0}, action, streams.player) ==
          std::vector<int>{0, 0});
  }
}

TEST_CASE("Step rejects out-of-range indices") {
  Game game = testing::ConstantGame({UniformChain(2, 2), UniformChain(2, 2)},
                                    {0.0, 0.0});
  Streams streams = Streams::FromSeed(0, 2);
  CHECK_THROWS_AS(Step(game, std::vector<int>{2, 0}, std::vector<int>{0, 0},
                       streams.player),
                  InputError);
  CHECK_THROWS_AS(Step(game, std::vector<int>{0, 0}, std::vector<int>{0, -1},
                       streams.player),
                  InputError);
  CHECK_THROWS_AS(Step(game, std::vector<int>{0}, std::vector<int>{0},
                       streams.player),
                  InputError);
}

TEST_CASE("Step uses only the acting player's stream") {
  Game game = testing::ConstantGame({UniformChain(4, 1), UniformChain(4, 1)},
                                    {0.0, 0.0});
  Streams a = Streams::FromSeed(5, 2);
  Streams b = Streams::FromSeed(5, 2);
  // Give player 1 a different stream in b; player 0's path must not change.
  b.player[1] = Stream(12345);
  std::vector<int> sa = {0, 0}, sb = {0, 0};
  for (int t = 0; t < 200; ++t) {
    sa = Step(game, sa, std::vector<int>{0, 0}, a.player);
    sb = Step(game, sb, std::vector<int>{0, 0}, b.player);
    CHECK(sa[0] == sb[0]);
  }
  CHECK(a.player[0] == b.player[0]);
}

TEST_CASE("Step is reproducible from the seed") {
  Game game = RandomGame(2, {3, 2}, {2, 2}, 17);
  auto trajectory = [&](std::uint64_t seed) {
    Streams streams = Streams::FromSeed(seed, 2);
    std::vector<int> s = {0, 0};
    std::vector<int> out;
    for (int t = 0; t < 500; ++t) {
      s = Step(game, s, std::vector<int>{t % 2, (t / 2) % 2}, streams.player);
      out.insert(out.end(), s.begin(), s.end());
    }
    return out;
  };
  CHECK(trajectory(3) == trajectory(3));
  CHECK(trajectory(3) != trajectory(4));
}

TEST_CASE("Independent uniform chains factor within L1 0.02") {
  Game game = testing::ConstantGame({UniformChain(2, 2), UniformChain(2, 2)},
                                    {0.0, 0.0});
  std::vector<Policy> pi = {Policy::Uniform(2, 2), Policy::Uniform(2, 2)};
  CHECK(IndependenceGap(game, pi, 100000, 42) <= 0.02);
}

TEST_CASE("Independence holds for arbitrary policies over 10^4 steps") {
  Stream stream(8);
  for (int trial = 0; trial < 5; ++trial) {
    Game game = RandomGame(2, {2, 2}, {2, 2}, 100 + trial);
    std::vector<Policy> pi;
    for (int i = 0; i < 2; ++i) {
      Policy p = Policy::Uniform(2, 2);
      for (int s = 0; s < 2; ++s) {
        const double u = stream.Uniform();
        p(s, 0) = u;
        p(s, 1) = 1.0 - u;
      }
      pi.push_back(p);
    }
    CHECK(IndependenceGap(game, pi, 10000, trial) <= 0.05);
  }
}

TEST_CASE("SampleAction follows the policy row") {
  Stream stream(77);
  Policy det = Policy::Uniform(2, 3);
  det(1, 0) = 0.0;
  det(1, 1) = 0.0;
  det(1, 2) = 1.0;
  for (int k = 0; k < 1000; ++k) CHECK(SampleAction(det, 1, stream) == 2);

  Policy uniform = Policy::Uniform(1, 8);
  std::vector<double> freq(8, 0.0);
  const int draws = 1000000;
  for (int k = 0; k < draws; ++k) freq[SampleAction(uniform, 0, stream)] += 1;
  for (double f : freq) CHECK(std::abs(f / draws - 0.125) <= 0.01);
}

TEST_CASE("SampleAction rejects unnormalized rows") {
  Stream stream(0);
  Policy pi = Policy::Uniform(2, 2);
  pi(0, 0) = 0.0;
  pi(0, 1) = 0.0;
  CHECK_THROWS_AS(SampleAction(pi, 0, stream), InputError);
  CHECK_NOTHROW(SampleAction(pi, 1, stream));
  pi(1, 0) = 0.6;
  CHECK_THROWS_AS(SampleAction(pi, 1, stream), InputError);
}

TEST_CASE("SampleAction is deterministic given the stream state") {
  Policy pi = Policy::Uniform(3, 4);
  Stream a(5, 10), b(5, 10);
  for (int k = 0; k < 100; ++k) {
    CHECK(SampleAction(pi, k % 3, a) == SampleAction(pi, k % 3, b));
  }
}

TEST_CASE("Smart-grid transition rows") {
  auto row = SmartGridTransition(7, 4, 3, 5);
  for (int s = 0; s < 8; ++s) CHECK(row[s] == doctest::Approx(s < 4 ? 0.25 : 0.0));
  row = SmartGridTransition(7, 4, 7, 0);
  CHECK(row[7] == 1.0);
  // C = 1, G = 1: the next state is the leftover (s - a)^+.
  CHECK(SmartGridTransition(1, 1, 0, 0) == std::vector<double>{1.0, 0.0});
  CHECK(SmartGridTransition(1, 1, 0, 1) == std::vector<double>{1.0, 0.0});
  CHECK(SmartGridTransition(1, 1, 1, 0) == std::vector<double>{0.0, 1.0});
  CHECK(SmartGridTransition(1, 1, 1, 1) == std::vector<double>{1.0, 0.0});
  for (int c = 1; c <= 7; ++c) {
    for (int g = 1; g <= 5; ++g) {
      for (int s = 0; s <= c; ++s) {
        for (int a = 0; a <= c; ++a) {
          double total = 0.0;
          for (double p : SmartGridTransition(c, g, s, a)) total += p;
          CHECK(std::abs(total - 1.0) <= 1e-12);
        }
      }
    }
  }
  CHECK_THROWS_AS(SmartGridTransition(7, 4, 8, 0), InputError);
}

TEST_CASE("Smart-grid reward examples") {
  std::vector<int> s = {0, 0}, a = {7, 3};
  CHECK(SmartGridReward(7, 0.0, s, a, 0) == 1.0);
  a = {0, 5};
  CHECK(SmartGridReward(7, 0.0, s, a, 0) == 0.0);
  a = {7, 7};
  CHECK(SmartGridReward(7, 1.5, s, a, 0) == 0.0);
  // p = 1.5 * (2 + 0) = 3, raw = 9 - 3 * 2 = 3.
  s = {1, 4};
  a = {3, 2};
  CHECK(SmartGridReward(7, 1.5, s, a, 0) == doctest::Approx(3.0 / 49.0));
  CHECK(SmartGridReward(7, 1.5, s, a, 1) == doctest::Approx(4.0 / 49.0));
}

TEST_CASE("Smart-grid reward stays in [0, 1]") {
  for (double lambda : {0.0, 0.5, 1.5, 10.0}) {
    std::vector<int> s(3), a(3);
    for (int x = 0; x < 4 * 4 * 4 * 4 * 4 * 4; ++x) {
      int y = x;
      for (int j = 0; j < 3; ++j) {
        s[j] = y % 4;
        y /= 4;
        a[j] = y % 4;
        y /= 4;
      }
      for (int i = 0; i < 3; ++i) {
        const double r = SmartGridReward(3, lambda, s, a, i);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
      }
    }
  }
}

TEST_CASE("Smart-grid game construction") {
  Game g2 = SmartGridGame(2, 7, {4}, 0.0);
  CHECK(g2.num_players() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(g2.chain(i).num_states() == 8);
    CHECK(g2.chain(i).num_actions() == 8);
  }
  CHECK_FALSE(g2.reward().is_tabular());
  std::vector<int> s = {0, 0}, a = {7, 7};
  CHECK(g2.Reward(s, a, 0) == 1.0);

  Game g5 = SmartGridGame(5, 7, {4, 4, 4, 4, 4}, 1.5);
  CHECK(g5.num_players() == 5);
  CHECK(g5.JointSize() == doctest::Approx(std::pow(64.0, 5)));
  CHECK_FALSE(g5.Enumerable());

  Game tiny = SmartGridGame(1, 1, {1}, 0.0);
  CHECK(tiny.chain(0).num_states() == 2);
  CHECK(tiny.chain(0).Prob(1, 0, 1) == 1.0);
  CHECK(tiny.chain(0).Prob(1, 1, 0) == 1.0);

  CHECK_THROWS_AS(SmartGridGame(2, 0, {4}, 0.0), InputError);
  CHECK_THROWS_AS(SmartGridGame(2, 7, {0}, 0.0), InputError);
  CHECK_THROWS_AS(SmartGridGame(2, 7, {4}, -1.0), InputError);
  CHECK_THROWS_AS(SmartGridGame(3, 7, {4, 4}, 0.0), InputError);
}

TEST_CASE("Random games are reproducible and ergodic") {
  Game a = RandomGame(2, {3, 2}, {2, 3}, 11);
  Game b = RandomGame(2, {3, 2}, {2, 3}, 11);
  Game c = RandomGame(2, {3, 2}, {2, 3}, 12);
  CHECK(GameToJson(a).dump() == GameToJson(b).dump());
  CHECK(GameHash(a) == GameHash(b));
  CHECK(GameHash(a) != GameHash(c));

  Stream stream(4);
  for (int i = 0; i < 2; ++i) {
    const PlayerChain& chain = a.chain(i);
    const int ns = chain.num_states();
    const int na = chain.num_actions();
    for (int trial = 0; trial < 100; ++trial) {
      // Random (possibly deterministic) policy; the floor makes every
      // induced kernel entry positive already at power one.
      Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ns, ns);
      for (int s = 0; s < ns; ++s) {
        const int act = static_cast<int>(stream.Uniform() * na);
        for (int next = 0; next < ns; ++next) k(s, next) = chain.Prob(s, act, next);
      }
      Eigen::MatrixXd p = Eigen::MatrixXd::Identity(ns, ns);
      for (int t = 0; t < ns; ++t) p = p * k;
      CHECK(p.minCoeff() > 0.0);
    }
    for (double x : chain.transition()) CHECK(x >= 0.01 - 1e-15);
  }
}

TEST_CASE("Random game with single states is a static matrix game") {
  Game g = RandomGame(3, {1, 1, 1}, {2, 3, 2}, 5);
  for (int i = 0; i < 3; ++i) {
    CHECK(g.chain(i).num_states() == 1);
    for (int a = 0; a < g.chain(i).num_actions(); ++a) {
      CHECK(g.chain(i).Prob(0, a, 0) == 1.0);
    }
  }
  CHECK(g.reward().is_tabular());
}

TEST_CASE("Constant-sum two-player game") {
  Game g = ZeroSumTwoPlayer({2, 2}, {2, 2}, 3);
  const auto& table = dynamic_cast<const TabularReward&>(g.reward());
  for (std::size_t x = 0; x < table.tables()[0].size(); ++x) {
    CHECK(table.At(0, x) + table.At(1, x) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(GameHash(g) == GameHash(ZeroSumTwoPlayer({2, 2}, {2, 2}, 3)));
  CHECK_THROWS_AS(ZeroSumTwoPlayer({2, 2, 2}, {2, 2, 2}, 3), InputError);
}

TEST_CASE("Tabular reward joint indexing puts player 0 first") {
  // Player 0: 2 states x 1 action, player 1: 1 state x 3 actions.
  std::vector<double> r0 = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  Game g = testing::TabularGame({UniformChain(2, 1), UniformChain(1, 3)},
                                {r0, r0});
  std::vector<int> s = {1, 0}, a = {0, 2};
  CHECK(g.Reward(s, a, 0) == 0.5);
  s = {0, 0};
  a = {0, 1};
  CHECK(g.Reward(s, a, 1) == 0.1);
}

TEST_CASE("Tabular reward rejects values outside [0, 1]") {
  CHECK_THROWS_AS(testing::TabularGame({UniformChain(1, 2)}, {{0.5, 1.5}}),
                  InputError);
  CHECK_THROWS_AS(testing::TabularGame({UniformChain(1, 2)}, {{0.5}}),
                  InputError);
}

TEST_CASE("Game JSON roundtrip preserves everything") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Game g = RandomGame(2, {2, 3}, {3, 2}, seed);
    Game back = GameFromJson(nlohmann::json::parse(GameToJson(g).dump()));
    CHECK(GameHash(back) == GameHash(g));
    for (int i = 0; i < 2; ++i) {
      CHECK(back.chain(i).transition() == g.chain(i).transition());
    }
    std::vector<int> s = {1, 2}, a = {2, 1};
    CHECK(back.Reward(s, a, 1) == g.Reward(s, a, 1));
  }
  Game sg = SmartGridGame(3, 5, {2, 3, 4}, 0.7);
  Game back = GameFromJson(GameToJson(sg));
  CHECK(GameHash(back) == GameHash(sg));
  std::vector<int> s = {1, 2, 3}, a = {4, 4, 0};
  for (int i = 0; i < 3; ++i) CHECK(back.Reward(s, a, i) == sg.Reward(s, a, i));
  CHECK(back.chain(2).transition() == sg.chain(2).transition());
}

TEST_CASE("Stream draws are uniform and restorable") {
  Stream s(123);
  for (int k = 0; k < 37; ++k) s();
  Stream copy(s.key(), s.counter());
  for (int k = 0; k < 10; ++k) CHECK(s() == copy());
  double mean = 0.0;
  for (int k = 0; k < 100000; ++k) mean += s.Uniform() / 100000;
  CHECK(std::abs(mean - 0.5) < 0.005);
  Streams a = Streams::FromSeed(1, 3);
  CHECK(a.player[0].key() != a.player[1].key());
  CHECK(a.nature.key() != a.player[2].key());
}

TEST_CASE("Flip chain fixture") {
  PlayerChain c = FlipChain(2, 0.25);
  CHECK(c.Prob(0, 1, 1) == 0.25);
  CHECK(c.Prob(1, 0, 1) == 0.75);
}

}  // namespace
}  // namespace occgame
