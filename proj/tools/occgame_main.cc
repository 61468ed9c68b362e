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

// occgame: run, gap, validate and reproduce subcommands.
//
// Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "occgame/experiment.h"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<long long> episodes;
  std::optional<std::string> out;
  std::optional<double> tau;
  std::optional<long long> fixed_batch_len;
};

void AddOverrides(CLI::App* app, Overrides& o) {
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--episodes", o.episodes, "Number of episodes K")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--tau-override", o.tau, "Mixing-time estimate to use")
      ->check(CLI::Range(1.0, 1e9));
  app->add_option("--fixed-batch-len", o.fixed_batch_len,
                  "Fixed sampling-window length (0 waits for coverage)")
      ->check(CLI::NonNegativeNumber);
}

void Apply(const Overrides& o, occgame::ExperimentConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.episodes) c.episodes = *o.episodes;
  if (o.out) c.out_dir = *o.out;
  if (o.tau) c.tau = *o.tau;
  if (o.fixed_batch_len) {
    c.fixed_batch_len = *o.fixed_batch_len;
    c.fixed_batch_auto = false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized learning of stationary Nash equilibria in "
               "stochastic games with independent chains"};
  app.require_subcommand(1);

  Overrides run_over;
  std::string run_config;
  std::optional<std::string> resume;
  int run_jobs = 1;
  int seeds = 1;
  CLI::App* run = app.add_subcommand("run", "Run an experiment from a config");
  run->add_option("--config", run_config, "Experiment config (JSON)")
      ->required();
  AddOverrides(run, run_over);
  run->add_option("--jobs", run_jobs, "Parallel runs in a seed sweep")
      ->check(CLI::PositiveNumber);
  run->add_option("--seeds", seeds,
                  "Sweep over this many consecutive seeds")
      ->check(CLI::PositiveNumber);
  run->add_option("--resume", resume, "Checkpoint to continue from");

  Overrides gap_over;
  std::string gap_config, gap_input;
  long long every = 1;
  CLI::App* gap = app.add_subcommand(
      "gap", "Nikaido-Isoda gaps of a checkpoint or iterates file");
  gap->add_option("--config", gap_config, "Experiment config of the run")
      ->required();
  gap->add_option("--input", gap_input,
                  "checkpoint.json or iterates.jsonl")
      ->required();
  gap->add_option("--every", every, "Evaluation cadence in episodes")
      ->check(CLI::PositiveNumber);
  gap->add_option("--out", gap_over.out, "Output directory for gap.csv");

  std::string level = "fast";
  std::string fault;
  std::uint64_t validate_seed = 1;
  CLI::App* validate =
      app.add_subcommand("validate", "Run the invariant suites");
  validate->add_option("--level", level, "fast or full")
      ->check(CLI::IsMember({"fast", "full"}));
  validate->add_option("--inject-fault", fault,
                       "Perturb one suite to exercise the failure path");
  validate->add_option("--seed", validate_seed, "Seed for the suites");

  Overrides rep_over;
  std::string figure;
  int rep_jobs = 1;
  CLI::App* reproduce =
      app.add_subcommand("reproduce", "Smart-grid reproduction runs");
  reproduce->add_option("figure", figure, "fig2, fig3a or fig3b")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3a", "fig3b"}));
  AddOverrides(reproduce, rep_over);
  reproduce->add_option("--jobs", rep_jobs, "Parallel runs")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      occgame::ExperimentConfig c = occgame::LoadConfig(run_config);
      Apply(run_over, c);
      if (seeds > 1) {
        if (resume) {
          std::cerr << "error: --resume cannot be combined with --seeds\n";
          return kUsage;
        }
        bool aborted = false;
        for (const auto& r : occgame::RunSweep(c, seeds, run_jobs, std::cout)) {
          aborted = aborted || r.aborted;
        }
        return aborted ? kFailure : kOk;
      }
      std::optional<std::filesystem::path> from;
      if (resume) from = *resume;
      const auto report = occgame::RunExperiment(c, from, std::cout);
      if (report.aborted) {
        std::cerr << "error: " << report.abort_reason << "\n";
        return kFailure;
      }
      return kOk;
    }
    if (*gap) {
      occgame::ExperimentConfig c = occgame::LoadConfig(gap_config);
      const std::filesystem::path out =
          gap_over.out ? std::filesystem::path(*gap_over.out) : c.out_dir;
      occgame::EvaluateGaps(c, gap_input, every, out, std::cout);
      return kOk;
    }
    if (*validate) {
      occgame::ValidationOptions o;
      o.level = level == "full" ? occgame::ValidationLevel::kFull
                                : occgame::ValidationLevel::kFast;
      o.inject_fault = fault;
      o.seed = validate_seed;
      bool ok = true;
      for (const auto& r : occgame::Validate(o, std::cout)) ok = ok && r.passed;
      std::cout << (ok ? "all suites passed" : "validation failed") << "\n";
      return ok ? kOk : kFailure;
    }
    if (*reproduce) {
      occgame::ReproduceOptions o;
      o.figure = figure;
      if (rep_over.episodes) o.episodes = *rep_over.episodes;
      if (rep_over.seed) o.seed = *rep_over.seed;
      if (rep_over.out) o.out_dir = *rep_over.out;
      if (rep_over.fixed_batch_len) o.fixed_batch_len = *rep_over.fixed_batch_len;
      o.tau = rep_over.tau;
      o.jobs = rep_jobs;
      bool aborted = false;
      for (const auto& r : occgame::Reproduce(o, std::cout)) {
        std::cout << r.name << ":";
        for (std::size_t i = 0; i < r.oscillation.size(); ++i) {
          std::cout << " player " << i << " trailing mean "
                    << r.report.trailing_mean_reward[i] << " oscillation "
                    << r.oscillation[i] << ";";
        }
        std::cout << "\n";
        aborted = aborted || r.report.aborted;
      }
      return aborted ? kFailure : kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
