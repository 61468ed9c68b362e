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

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.h"
#include "occgame/experiment.h"

namespace occgame {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "occgame_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Runs the CLI with stdout and stderr captured to `log`; returns the exit
// code.
int Cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(OCCGAME_CLI_PATH) + " " + args + " >" +
                          log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json SmallConfig(const fs::path& out) {
  return {{"game",
           {{"preset", "random"},
            {"state_sizes", {2, 3}},
            {"action_sizes", {2, 2}},
            {"seed", 7}}},
          {"algorithm", "DA"},
          {"schedule", {{"kind", "inverse_power"}, {"beta", 0.6}}},
          {"regularizer", {{"kind", "quadratic"}, {"c", 0.5}}},
          {"burn_in", 3},
          {"delta", 0.01},
          {"tau", 2.0},
          {"episodes", 100},
          {"seed", 5},
          {"logging",
           {{"gap_every", 10}, {"checkpoint_every", 40}, {"iterates", true}}},
          {"out", out.string()}};
}

fs::path WriteConfig(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  WriteFile(p, j.dump(2));
  return p;
}

std::string ConfigErrorOf(const json& j) {
  try {
    ParseConfig(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST_CASE("Config errors name the offending field") {
  const json base = SmallConfig("out");
  json j = base;
  j["episodez"] = 3;
  CHECK(ConfigErrorOf(j).find("'episodez'") != std::string::npos);
  j = base;
  j["episodes"] = "many";
  CHECK(ConfigErrorOf(j).find("'episodes'") != std::string::npos);
  j = base;
  j["schedule"]["beta"] = 0.3;
  CHECK(ConfigErrorOf(j).find("'schedule.beta'") != std::string::npos);
  j = base;
  j.erase("game");
  CHECK(ConfigErrorOf(j).find("'game'") != std::string::npos);
  j = base;
  j["game"] = {{"preset", "smart_grid"}, {"n", 0}};
  CHECK(ConfigErrorOf(j).find("'game.n'") != std::string::npos);
  j["game"] = {{"preset", "smart_grid"}, {"n", 2}, {"harvest", 9}};
  CHECK(ConfigErrorOf(j).find("'game.harvest'") != std::string::npos);
  j["game"] = {{"preset", "chess"}};
  CHECK(ConfigErrorOf(j).find("chess") != std::string::npos);
  j["game"] = {{"file", "no_such_game.json"}};
  CHECK(ConfigErrorOf(j).find("does not exist") != std::string::npos);
  j = base;
  j["logging"]["thin"] = 0;
  CHECK(ConfigErrorOf(j).find("'logging.thin'") != std::string::npos);
  j = base;
  j["algorithm"] = "DA";
  j["regularizer"] = {{"kind", "entropy"}};
  CHECK(ConfigErrorOf(j).find("'regularizer'") != std::string::npos);
  CHECK(ConfigErrorOf(base).empty());
}

TEST_CASE("Malformed config files report the line") {
  const fs::path dir = Scratch("malformed");
  WriteFile(dir / "bad.json", "{\n  \"game\": {\n  \"episodes\" 3\n}\n");
  try {
    LoadConfig(dir / "bad.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(LoadConfig(dir / "missing.json"), InputError);
}

TEST_CASE("Environment overrides seed and output directory only") {
  const fs::path dir = Scratch("env");
  const fs::path cfg = WriteConfig(dir, SmallConfig(dir / "out"));
  setenv("OCCGAME_SEED", "99", 1);
  setenv("OCCGAME_OUT", "/tmp/elsewhere", 1);
  const ExperimentConfig c = LoadConfig(cfg);
  CHECK(c.seed == 99);
  CHECK(c.out_dir == fs::path("/tmp/elsewhere"));
  CHECK(c.episodes == 100);
  setenv("OCCGAME_SEED", "12x", 1);
  CHECK_THROWS_AS(LoadConfig(cfg), ConfigError);
  unsetenv("OCCGAME_SEED");
  unsetenv("OCCGAME_OUT");
  CHECK(LoadConfig(cfg).seed == 5);
}

TEST_CASE("Config survives a JSON roundtrip") {
  const ExperimentConfig c = ParseConfig(SmallConfig("out"));
  const json once = ConfigToJson(c);
  CHECK(ConfigToJson(ParseConfig(once)) == once);
  json autos = SmallConfig("out");
  autos["burn_in"] = "auto";
  autos["delta"] = "auto";
  autos["tau"] = "auto";
  autos["fixed_batch_len"] = "auto";
  const json again = ConfigToJson(ParseConfig(autos));
  CHECK(again["burn_in"] == "auto");
  CHECK(again["delta"] == "auto");
  CHECK(again["fixed_batch_len"] == "auto");
  CHECK(ConfigToJson(ParseConfig(again)) == again);
}

TEST_CASE("Exit codes") {
  const fs::path dir = Scratch("exit");
  CHECK(Cli("", dir / "log") == 2);
  CHECK(Cli("run", dir / "log") == 2);
  CHECK(Cli("run --config x.json --bogus", dir / "log") == 2);
  CHECK(Cli("reproduce fig9", dir / "log") == 2);
  CHECK(Cli("--help", dir / "log") == 0);
  CHECK(Cli("run --config " + (dir / "nope.json").string(), dir / "log") == 1);
  CHECK(ReadFile(dir / "log").find("nope.json") != std::string::npos);

  json j = SmallConfig(dir / "zero");
  j["episodes"] = 0;
  CHECK(Cli("run --config " + WriteConfig(dir, j).string(), dir / "log") == 0);
  const std::string csv = ReadFile(dir / "zero" / "trajectory.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
  CHECK(csv.rfind("episode,player,mean_reward,batch_len,eta", 0) == 0);
}

TEST_CASE("Run writes the documented outputs") {
  const fs::path dir = Scratch("outputs");
  json j = SmallConfig(dir / "out");
  j["logging"]["thin"] = 3;
  j["episodes"] = 10;
  REQUIRE(Cli("run --config " + WriteConfig(dir, j).string(), dir / "log") == 0);
  std::ifstream in(dir / "out" / "trajectory.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "episode,player,mean_reward,batch_len,eta,mean_reward_full,"
        "mean_reward_sampling,uncovered_fraction,avg_gap,gap");
  std::vector<long long> episodes;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    REQUIRE(cells.size() == 10);
    if (cells[1] == "0") episodes.push_back(std::stoll(cells[0]));
    // Every float is written with %.17g.
    for (int c : {2, 4, 5, 6, 7}) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", std::stod(cells[c]));
      CHECK(cells[c] == buf);
    }
    CHECK(cells[2] == cells[5]);
  }
  CHECK(episodes == std::vector<long long>{3, 6, 9, 10});
  const std::string summary = ReadFile(dir / "out" / "summary.txt");
  CHECK(summary.find("episodes = 10") != std::string::npos);
  CHECK(summary.find("averaged_gap = ") != std::string::npos);
  CHECK(summary.find("wall_seconds = ") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "checkpoint.json"));
  const json resolved = json::parse(ReadFile(dir / "out" / "config.json"));
  CHECK(resolved["resolved"]["burn_in"] == 3);
}

TEST_CASE("Resume reproduces the uninterrupted run byte for byte") {
  const fs::path dir = Scratch("resume");
  const fs::path cfg = WriteConfig(dir, SmallConfig(dir / "full"));
  REQUIRE(Cli("run --config " + cfg.string(), dir / "log") == 0);
  const std::string full_csv = ReadFile(dir / "full" / "trajectory.csv");
  const std::string full_iterates = ReadFile(dir / "full" / "iterates.jsonl");

  // Stop at 40, then continue from the final checkpoint of the short run.
  REQUIRE(Cli("run --config " + cfg.string() + " --episodes 40 --out " +
                  (dir / "part").string(),
              dir / "log") == 0);
  REQUIRE(Cli("run --config " + cfg.string() + " --out " +
                  (dir / "part").string() + " --resume " +
                  (dir / "part" / "checkpoint.json").string(),
              dir / "log") == 0);
  CHECK(ReadFile(dir / "part" / "trajectory.csv") == full_csv);
  CHECK(ReadFile(dir / "part" / "iterates.jsonl") == full_iterates);

  // Rewinding a finished run to an intermediate checkpoint.
  REQUIRE(Cli("run --config " + cfg.string() + " --resume " +
                  (dir / "full" / "checkpoints" / "checkpoint_80.json").string(),
              dir / "log") == 0);
  CHECK(ReadFile(dir / "full" / "trajectory.csv") == full_csv);

  // A checkpoint from a different seed is refused.
  CHECK(Cli("run --config " + cfg.string() + " --seed 6 --resume " +
                (dir / "full" / "checkpoint.json").string(),
            dir / "log") == 1);
  CHECK(ReadFile(dir / "log").find("different settings") != std::string::npos);
}

TEST_CASE("Gap evaluation") {
  const fs::path dir = Scratch("gap");
  WriteFile(dir / "pennies.json", GameToJson(testing::MatchingPennies()).dump());
  json j = {{"game", {{"file", "pennies.json"}}},
            {"burn_in", 1},
            {"delta", 0.0},
            {"tau", 1.0},
            {"out", (dir / "out").string()}};
  const fs::path cfg = WriteConfig(dir, j);
  const ExperimentConfig c = LoadConfig(cfg);
  const std::string hash = GameHash(BuildGame(c));

  SUBCASE("constant trajectory at the equilibrium") {
    std::string lines =
        json{{"format", "occgame.iterates/1"}, {"game_hash", hash}}.dump() +
        "\n";
    for (int k = 1; k <= 25; ++k) {
      lines += json{{"episode", k},
                    {"eta", 1.0 / k},
                    {"rho", {{0.5, 0.5}, {0.5, 0.5}}}}
                   .dump() +
               "\n";
    }
    WriteFile(dir / "iterates.jsonl", lines);
    REQUIRE(Cli("gap --config " + cfg.string() + " --input " +
                    (dir / "iterates.jsonl").string() + " --every 10",
                dir / "log") == 0);
    std::ifstream in(dir / "out" / "gap.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "episode,averaged_gap,average_gap,last_gap");
    std::vector<long long> at;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');
      at.push_back(std::stoll(cell));
      while (std::getline(ss, cell, ',')) CHECK(std::abs(std::stod(cell)) <= 1e-6);
    }
    CHECK(at == std::vector<long long>{10, 20, 25});
  }

  SUBCASE("pure profile has gap 1") {
    std::string lines =
        json{{"format", "occgame.iterates/1"}, {"game_hash", hash}}.dump() +
        "\n" +
        json{{"episode", 1}, {"eta", 1.0}, {"rho", {{1.0, 0.0}, {1.0, 0.0}}}}
            .dump() +
        "\n";
    WriteFile(dir / "pure.jsonl", lines);
    CHECK(EvaluateGaps(c, dir / "pure.jsonl", 1, dir / "pure", std::cout) == 1);
    const std::string csv = ReadFile(dir / "pure" / "gap.csv");
    CHECK(csv.find("\n1,1,1,1\n") != std::string::npos);
  }

  SUBCASE("mismatched game hash") {
    WriteFile(dir / "other.jsonl",
              json{{"format", "occgame.iterates/1"},
                   {"game_hash", "0123456789abcdef"}}
                      .dump() +
                  "\n");
    CHECK_THROWS_AS(EvaluateGaps(c, dir / "other.jsonl", 1, dir, std::cout),
                    InputError);
    CHECK(Cli("gap --config " + cfg.string() + " --input " +
                  (dir / "other.jsonl").string(),
              dir / "log") == 1);
  }

  SUBCASE("enumeration cap refusal") {
    json capped = j;
    capped["game"]["enumeration_cap"] = 3;
    const fs::path capped_cfg = dir / "capped.json";
    WriteFile(capped_cfg, capped.dump());
    CHECK(Cli("gap --config " + capped_cfg.string() + " --input " +
                  cfg.string(),
              dir / "log") == 1);
    CHECK(ReadFile(dir / "log").find("exceeds cap") != std::string::npos);
  }
}

TEST_CASE("Gap command agrees with the in-run gap columns") {
  const fs::path dir = Scratch("gap_consistency");
  const fs::path cfg = WriteConfig(dir, SmallConfig(dir / "out"));
  REQUIRE(Cli("run --config " + cfg.string(), dir / "log") == 0);
  const ExperimentConfig c = LoadConfig(cfg);
  REQUIRE(EvaluateGaps(c, dir / "out" / "iterates.jsonl", 10, dir / "eval",
                       std::cout) == 10);
  std::map<long long, std::string> in_run;
  {
    std::ifstream in(dir / "out" / "trajectory.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() == 10 && cells[1] == "0") {
        in_run[std::stoll(cells[0])] = cells[8];
      }
    }
  }
  std::ifstream in(dir / "eval" / "gap.csv");
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    const long long k = std::stoll(line.substr(0, line.find(',')));
    const std::string rest = line.substr(line.find(',') + 1);
    const double from_file = std::stod(rest.substr(0, rest.find(',')));
    REQUIRE(in_run.count(k));
    CHECK(from_file == doctest::Approx(std::stod(in_run[k])).epsilon(1e-12));
    ++rows;
  }
  CHECK(rows == 10);
  // A checkpoint gives one evaluation point.
  CHECK(EvaluateGaps(c, dir / "out" / "checkpoint.json", 1, dir / "ckpt",
                     std::cout) == 1);
}

TEST_CASE("Seed sweeps are deterministic under --jobs") {
  const fs::path dir = Scratch("sweep");
  json j = SmallConfig(dir / "unused");
  j["logging"] = {{"thin", 1}};
  j["episodes"] = 60;
  j["seed"] = 11;
  const fs::path cfg = WriteConfig(dir, j);
  REQUIRE(Cli("run --config " + cfg.string() + " --seeds 3 --jobs 1 --out " +
                  (dir / "serial").string(),
              dir / "log") == 0);
  REQUIRE(Cli("run --config " + cfg.string() + " --seeds 3 --jobs 3 --out " +
                  (dir / "parallel").string(),
              dir / "log") == 0);
  REQUIRE(Cli("run --config " + cfg.string() + " --seed 12 --out " +
                  (dir / "single").string(),
              dir / "log") == 0);
  for (int s : {11, 12, 13}) {
    const std::string name = "seed_" + std::to_string(s);
    const std::string a = ReadFile(dir / "serial" / name / "trajectory.csv");
    CHECK(a.size() > 100);
    CHECK(a == ReadFile(dir / "parallel" / name / "trajectory.csv"));
  }
  CHECK(ReadFile(dir / "single" / "trajectory.csv") ==
        ReadFile(dir / "serial" / "seed_12" / "trajectory.csv"));
  CHECK(ReadFile(dir / "serial" / "seed_11" / "trajectory.csv") !=
        ReadFile(dir / "serial" / "seed_12" / "trajectory.csv"));
}

TEST_CASE("Batch cap aborts the run with the episode index") {
  const fs::path dir = Scratch("cap");
  json j = SmallConfig(dir / "out");
  j["batch_cap"] = 1;
  j["logging"] = {{"thin", 1}};
  CHECK(Cli("run --config " + WriteConfig(dir, j).string(), dir / "log") == 1);
  CHECK(ReadFile(dir / "log").find("in episode") != std::string::npos);
  CHECK(ReadFile(dir / "out" / "summary.txt").find("aborted = true") !=
        std::string::npos);
}

TEST_CASE("Fixed-length batches from the command line") {
  const fs::path dir = Scratch("fixed");
  json j = SmallConfig(dir / "out");
  j["logging"] = {{"thin", 1}};
  j["episodes"] = 5;
  REQUIRE(Cli("run --config " + WriteConfig(dir, j).string() +
                  " --fixed-batch-len 7",
              dir / "log") == 0);
  for (const auto& r : ReadRewardColumns(dir / "out" / "trajectory.csv")) {
    CHECK(r.size() == 5);
  }
  const std::string csv = ReadFile(dir / "out" / "trajectory.csv");
  CHECK(csv.find("\n1,0,") != std::string::npos);
  // burn-in 3 + 7 sampling steps.
  CHECK(csv.find(",10,") != std::string::npos);
}

TEST_CASE("Validate exits nonzero on an injected fault") {
  const fs::path dir = Scratch("validate");
  CHECK(Cli("validate --level fast", dir / "log") == 0);
  CHECK(ReadFile(dir / "log").find("all suites passed") != std::string::npos);
  for (const char* suite : {"roundtrip", "projection", "lp", "bias",
                            "independence"}) {
    CHECK(Cli(std::string("validate --inject-fault ") + suite, dir / "log") ==
          1);
    CHECK(ReadFile(dir / "log").find(std::string("FAIL ") + suite) !=
          std::string::npos);
  }
  CHECK(Cli("validate --inject-fault nosuch", dir / "log") == 1);
  CHECK(Cli("validate --level medium", dir / "log") == 2);
}

TEST_CASE("Reproduce writes plot-ready tables") {
  const fs::path dir = Scratch("reproduce");
  REQUIRE(Cli("reproduce fig3a --episodes 6 --out " + dir.string(),
              dir / "log") == 0);
  const std::string table = ReadFile(dir / "fig3a.csv");
  CHECK(table.rfind("run,n,lambda,episode,player,mean_reward,window_mean\n", 0) ==
        0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 1 + 6 * 2);
  CHECK(fs::exists(dir / "fig3a_summary.txt"));
  const ExperimentConfig c = FigureConfig(5, 1.5, ReproduceOptions{});
  CHECK(c.burn_in == 500);
  CHECK(c.delta == std::vector<double>{7.8125e-4});
  CHECK(c.regularizer.coefficient == 1000.0);
  CHECK(c.schedule.kind == Schedule::Kind::kScaledInverse);
  CHECK(c.schedule.param == 0.02);
  CHECK(c.episodes == 5000);
}

TEST_CASE("Trailing means and windowed oscillation") {
  const std::vector<double> v = {1, 2, 3, 4, 5, 6};
  CHECK(TrailingMean(v, 2) == 5.5);
  CHECK(TrailingMean(v, 100) == 3.5);
  CHECK(TrailingMean({}, 3) == 0.0);
  // Windows of 2 ending at 4, 5, 6: means 3.5, 4.5, 5.5.
  CHECK(WindowedOscillation(v, 2, 3) == 2.0);
  CHECK(WindowedOscillation(v, 2, 6) == 0.0);
  CHECK(WindowedOscillation(std::vector<double>(10, 0.3), 3, 0) == 0.0);
  CHECK_THROWS_AS(WindowedOscillation(v, 0, 0), InputError);
}

}  // namespace
}  // namespace occgame
