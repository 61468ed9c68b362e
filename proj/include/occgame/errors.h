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

#ifndef OCCGAME_ERRORS_H_
#define OCCGAME_ERRORS_H_

#include <stdexcept>
#include <string>

namespace occgame {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition on caller-supplied data (bad index, bad row sum...).
class InputError : public Error {
 public:
  using Error::Error;
};

// An induced chain has more than one recurrent class or is periodic.
class NonErgodic : public Error {
 public:
  using Error::Error;
};

class EmptyShrunkPolytope : public Error {
 public:
  EmptyShrunkPolytope(int player, double delta, double max_floor)
      : Error("shrunk occupation polytope is empty for player " +
              std::to_string(player) + " at delta=" + std::to_string(delta) +
              " (largest feasible floor " + std::to_string(max_floor) + ")"),
        player_(player),
        delta_(delta) {}

  int player() const { return player_; }
  double delta() const { return delta_; }

 private:
  int player_;
  double delta_;
};

// Iterative solver failed to reach its tolerance.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

// Joint (state, action) enumeration would exceed the configured cap.
class EnumerationTooLarge : public Error {
 public:
  EnumerationTooLarge(double size, double cap)
      : Error("joint enumeration of size " + std::to_string(size) +
              " exceeds cap " + std::to_string(cap)) {}
};

}  // namespace occgame

#endif  // OCCGAME_ERRORS_H_
