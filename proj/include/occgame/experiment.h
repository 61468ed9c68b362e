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

// Config-driven experiments: parsing, runs with CSV/checkpoint output, gap
// evaluation, validation suites and the smart-grid reproductions.

#ifndef OCCGAME_EXPERIMENT_H_
#define OCCGAME_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "occgame/errors.h"
#include "occgame/game.h"
#include "occgame/learner.h"
#include "occgame/metrics.h"

namespace occgame {

// Bad or missing config field. The message names the field.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

struct LoggingOptions {
  // Write one CSV row group every `thin` episodes (the last is always kept).
  long long thin = 1;
  // Evaluate gaps every `gap_every` episodes (0 disables).
  long long gap_every = 0;
  // mean_reward counts the burn-in steps when true.
  bool include_burn_in_reward = true;
  // Write checkpoints every `checkpoint_every` episodes (0: final only).
  long long checkpoint_every = 0;
  // Write the played iterates to iterates.jsonl for `gap`.
  bool iterates = false;
};

struct ExperimentConfig {
  // One of {"preset": ...}, {"file": ...} or {"inline": ...}.
  nlohmann::json game;
  // Directory that relative game files resolve against.
  std::filesystem::path base_dir;
  Algorithm algorithm = Algorithm::kDualAveraging;
  Schedule schedule = Schedule::InversePower(0.6);
  Regularizer regularizer = Regularizer::Quadratic(0.5);
  // Unset means the automatic burn-in from tau and epsilon.
  std::optional<long long> burn_in;
  // Empty means ComputeDelta with epsilon.
  std::vector<double> delta;
  double epsilon = 0.05;
  // Unset means MixingTimeBound over every player.
  std::optional<double> tau;
  int tau_samples = 200;
  long long episodes = 1000;
  std::uint64_t seed = 0;
  long long batch_cap = 0;
  // Fixed-length batch mode: explicit length, or factor for the automatic
  // length when fixed_batch_auto is set.
  long long fixed_batch_len = 0;
  bool fixed_batch_auto = false;
  double fixed_batch_factor = 1.0;
  int threads = 1;
  LoggingOptions logging;
  std::filesystem::path out_dir = "out";
};

// Parses the JSON document. Unknown keys are rejected.
ExperimentConfig ParseConfig(const nlohmann::json& j,
                             const std::filesystem::path& base_dir = ".");

// Reads and parses a config file, then applies OCCGAME_SEED and OCCGAME_OUT
// from the environment.
ExperimentConfig LoadConfig(const std::filesystem::path& path);

nlohmann::json ConfigToJson(const ExperimentConfig& config);

Game BuildGame(const ExperimentConfig& config);

// Run options with every "auto" value resolved.
struct ResolvedRun {
  RunOptions options;
  double tau = 1.0;
};
ResolvedRun ResolveRun(const ExperimentConfig& config, const Game& game);

// Incremental state for the averaged Nikaido-Isoda gap: per-player
// sum_l eta_l v_i(rho^l) and sum_l eta_l V_i(rho^l).
struct GapAccumulator {
  std::vector<Eigen::VectorXd> gradient_sum;
  std::vector<double> payoff_sum;
  double weight_sum = 0.0;

  void Add(const Game& game, const Profile& rho, double eta);
  double AveragedGap(const std::vector<OccupationPolytope>& polytopes) const;

  nlohmann::json ToJson() const;
  static GapAccumulator FromJson(const nlohmann::json& j);
};

struct RunReport {
  long long episodes = 0;
  bool aborted = false;
  std::string abort_reason;
  double wall_seconds = 0.0;
  double tau = 1.0;
  long long burn_in = 0;
  std::vector<double> delta;
  std::optional<double> averaged_gap;
  std::optional<double> average_gap;
  double mean_batch_length = 0.0;
  long long max_batch_length = 0;
  // Per player: mean reward over the last 500 episodes.
  std::vector<double> trailing_mean_reward;
};

// Runs the experiment and writes trajectory.csv, summary.txt, config.json and
// checkpoints under config.out_dir. With `resume`, continues from that
// checkpoint and keeps the CSV rows up to its episode.
RunReport RunExperiment(const ExperimentConfig& config,
                        const std::optional<std::filesystem::path>& resume,
                        std::ostream& log);

// Runs seeds seed, seed + 1, ... into out_dir/seed_<s> with `jobs` workers.
std::vector<RunReport> RunSweep(const ExperimentConfig& config, int seeds,
                                int jobs, std::ostream& log);

// Gap evaluation of a checkpoint or an iterates.jsonl file. Writes gap.csv
// to out_dir and returns the number of evaluation points.
int EvaluateGaps(const ExperimentConfig& config,
                 const std::filesystem::path& input, long long every,
                 const std::filesystem::path& out_dir, std::ostream& log);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

enum class ValidationLevel { kFast, kFull };

struct ValidationOptions {
  ValidationLevel level = ValidationLevel::kFast;
  // Name of a suite whose checked quantity is perturbed, to exercise the
  // failure path.
  std::string inject_fault;
  std::uint64_t seed = 1;
};

std::vector<SuiteResult> Validate(const ValidationOptions& options,
                                  std::ostream& log);

// Smart-grid reproduction of one figure: fig2 runs n = 2 and n = 5 with
// lambda = 0, fig3a n = 2 and fig3b n = 5 with lambda = 1.5.
struct FigureRun {
  std::string name;
  int num_players = 0;
  double lambda = 0.0;
  RunReport report;
  // Per player: max - min of the trailing-window mean over windows ending
  // after `stabilize_after`.
  std::vector<double> oscillation;
};

struct ReproduceOptions {
  std::string figure;
  long long episodes = 5000;
  std::uint64_t seed = 2026;
  int jobs = 1;
  std::optional<double> tau;
  long long fixed_batch_len = 0;
  std::filesystem::path out_dir = "out";
  long long window = 500;
  long long stabilize_after = 2000;
};

// The config used for one smart-grid reproduction run.
ExperimentConfig FigureConfig(int num_players, double lambda,
                              const ReproduceOptions& options);

std::vector<FigureRun> Reproduce(const ReproduceOptions& options,
                                 std::ostream& log);

// Mean of the last `window` values (all of them if fewer).
double TrailingMean(const std::vector<double>& values, long long window);

// max - min of the `window`-long moving mean over windows whose last index
// (1-based) exceeds `after`.
double WindowedOscillation(const std::vector<double>& values, long long window,
                           long long after);

// Per-player mean_reward columns of a trajectory CSV, indexed by episode.
std::vector<std::vector<double>> ReadRewardColumns(
    const std::filesystem::path& csv);

}  // namespace occgame

#endif  // OCCGAME_EXPERIMENT_H_
