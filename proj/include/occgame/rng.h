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

#ifndef OCCGAME_RNG_H_
#define OCCGAME_RNG_H_

#include <cstdint>
#include <limits>
#include <vector>

namespace occgame {

// Counter-based random stream. The output for draw number `counter` is a
// bijective mix of (key, counter), so the full stream state is the pair and
// can be checkpointed and restored exactly. Satisfies
// UniformRandomBitGenerator so it plugs into <random> distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream() = default;
  explicit Stream(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return Mix(key_ ^ Mix(counter_++ + kGolden)); }

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Child stream with an independent key; does not advance this stream.
  Stream Split(std::uint64_t index) const {
    return Stream(Mix(key_ + kGolden * (index + 1)) ^ 0xd1b54a32d192ed03ULL);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const Stream&, const Stream&) = default;

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  // SplitMix64 finalizer.
  static std::uint64_t Mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// One stream per player plus one for nature, all split from a master seed.
struct Streams {
  std::vector<Stream> player;
  Stream nature;

  static Streams FromSeed(std::uint64_t seed, int num_players) {
    Stream master(seed);
    Streams s;
    for (int i = 0; i < num_players; ++i) s.player.push_back(master.Split(i));
    s.nature = master.Split(num_players);
    return s;
  }

  friend bool operator==(const Streams&, const Streams&) = default;
};

}  // namespace occgame

#endif  // OCCGAME_RNG_H_
