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

#include "occgame/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "occgame/occupancy.h"

namespace occgame {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kCsvHeader[] =
    "episode,player,mean_reward,batch_len,eta,mean_reward_full,"
    "mean_reward_sampling,uncovered_fraction,avg_gap,gap";
constexpr char kCheckpointFormat[] = "occgame.run/1";
constexpr char kIteratesFormat[] = "occgame.iterates/1";
constexpr long long kTrailingWindow = 500;

std::string Fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string Hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t Fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Typed access to config fields with the dotted field name in every error.
class Fields {
 public:
  Fields(const json& obj, std::string where) : obj_(obj), where_(where) {
    if (!obj.is_object()) {
      throw ConfigError("config field '" + where + "': expected an object");
    }
  }

  bool Has(const char* key) const { return obj_.contains(key); }
  const json& Raw(const char* key) const { return obj_.at(key); }
  std::string Name(const char* key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

  template <typename T>
  T Get(const char* key) const {
    if (!Has(key)) throw ConfigError("config field '" + Name(key) + "' is missing");
    return As<T>(obj_.at(key), Name(key));
  }

  template <typename T>
  T Get(const char* key, T fallback) const {
    return Has(key) ? As<T>(obj_.at(key), Name(key)) : fallback;
  }

  void Allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : obj_.items()) {
      if (!allowed.count(key)) {
        throw ConfigError("config field '" + Name(key.c_str()) +
                          "' is not recognized");
      }
    }
  }

  template <typename T>
  static T As(const json& j, const std::string& name) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError(Expected(name, "a boolean"));
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw ConfigError(Expected(name, "an integer"));
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError(Expected(name, "a number"));
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ConfigError(Expected(name, "a string"));
    }
    try {
      return j.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(Expected(name, "a value of the documented type"));
    }
  }

 private:
  static std::string Expected(const std::string& name, const char* what) {
    return "config field '" + name + "': expected " + what;
  }

  const json& obj_;
  std::string where_;
};

template <typename T>
void CheckRange(const std::string& name, T value, T lo, T hi) {
  if (!(value >= lo && value <= hi)) {
    std::ostringstream msg;
    msg << "config field '" << name << "': " << value << " is outside ["
        << lo << ", " << hi << "]";
    throw ConfigError(msg.str());
  }
}

std::vector<int> IntList(const json& j, const std::string& name) {
  if (j.is_number_integer()) return {j.get<int>()};
  if (!j.is_array() || j.empty()) {
    throw ConfigError("config field '" + name +
                      "': expected an integer or a non-empty integer array");
  }
  std::vector<int> out;
  for (const auto& e : j) out.push_back(Fields::As<int>(e, name));
  return out;
}

void CheckGameSpec(const json& spec, const fs::path& base_dir) {
  const Fields f(spec, "game");
  if (f.Has("preset")) {
    const std::string preset = f.Get<std::string>("preset");
    if (preset == "smart_grid") {
      f.Allow({"preset", "n", "capacity", "harvest", "lambda",
               "utility_exponents", "enumeration_cap"});
      const int n = f.Get<int>("n");
      const int c = f.Get<int>("capacity", 7);
      CheckRange(f.Name("n"), n, 1, 32);
      CheckRange(f.Name("capacity"), c, 1, 63);
      if (f.Has("harvest")) {
        for (int g : IntList(f.Raw("harvest"), f.Name("harvest"))) {
          CheckRange(f.Name("harvest"), g, 1, c + 1);
        }
      }
      CheckRange(f.Name("lambda"), f.Get<double>("lambda", 0.0), 0.0, 1e3);
    } else if (preset == "random" || preset == "zero_sum") {
      f.Allow({"preset", "state_sizes", "action_sizes", "seed", "n",
               "enumeration_cap"});
      for (const char* key : {"state_sizes", "action_sizes"}) {
        for (int v : IntList(f.Raw(key), f.Name(key))) {
          CheckRange(f.Name(key), v, 1, 99);
        }
      }
    } else {
      throw ConfigError("config field 'game.preset': unknown preset '" +
                        preset + "' (expected smart_grid, random or zero_sum)");
    }
  } else if (f.Has("file")) {
    f.Allow({"file", "enumeration_cap"});
    const fs::path p = base_dir / f.Get<std::string>("file");
    if (!fs::exists(p)) {
      throw ConfigError("config field 'game.file': " + p.string() +
                        " does not exist");
    }
  } else if (f.Has("inline")) {
    f.Allow({"inline", "enumeration_cap"});
  } else {
    throw ConfigError(
        "config field 'game': expected one of 'preset', 'file' or 'inline'");
  }
  if (f.Has("enumeration_cap")) {
    CheckRange(f.Name("enumeration_cap"), f.Get<double>("enumeration_cap"),
               1.0, 1e12);
  }
}

const char* AlgorithmName(Algorithm a) {
  return a == Algorithm::kMirrorDescent ? "MD" : "DA";
}

json ScheduleToJson(const Schedule& s) {
  switch (s.kind) {
    case Schedule::Kind::kInversePower:
      return {{"kind", "inverse_power"}, {"beta", s.param}};
    case Schedule::Kind::kTheorem5:
      return {{"kind", "theorem5"}, {"beta", s.param}};
    case Schedule::Kind::kScaledInverse:
      return {{"kind", "scaled_inverse"}, {"c", s.param}};
  }
  return {};
}

json RegularizerToJson(const Regularizer& r) {
  if (r.kind == Regularizer::Kind::kEntropy) return {{"kind", "entropy"}};
  return {{"kind", "quadratic"}, {"c", r.coefficient}};
}

// Hash of everything that shapes the trajectory except the episode count.
std::string RunHash(const std::string& game_hash, const ResolvedRun& run) {
  const RunOptions& o = run.options;
  json j = {{"game", game_hash},
            {"algorithm", AlgorithmName(o.algorithm)},
            {"schedule", ScheduleToJson(o.schedule)},
            {"regularizer", RegularizerToJson(o.regularizer)},
            {"burn_in", o.burn_in},
            {"delta", o.delta},
            {"tau", o.tau},
            {"batch_cap", o.batch_cap},
            {"fixed_length", o.fixed_length},
            {"seed", o.seed}};
  return Hex64(Fnv1a(j.dump()));
}

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void WriteTextFile(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << text;
    if (!out) throw InputError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct CsvRow {
  long long episode = 0;
  int player = 0;
  double mean_reward = 0.0;
  long long batch_len = 0;
};

std::vector<std::string> SplitComma(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<CsvRow> ReadTrajectory(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw InputError("cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = SplitComma(line);
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw InputError(csv.string() + ": missing column " + name);
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ce = column("episode"), cp = column("player"),
                    cr = column("mean_reward"), cb = column("batch_len");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = SplitComma(line);
    CsvRow r;
    r.episode = std::stoll(cells.at(ce));
    r.player = std::stoi(cells.at(cp));
    r.mean_reward = std::stod(cells.at(cr));
    r.batch_len = std::stoll(cells.at(cb));
    rows.push_back(r);
  }
  return rows;
}

// Keeps the header and every line whose leading episode field is at most
// `episode`; `header_lines` lines are always kept.
void TruncateByEpisode(const fs::path& path, long long episode,
                       int header_lines,
                       long long (*episode_of)(const std::string&)) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::string line, kept;
  int seen = 0;
  while (std::getline(in, line)) {
    if (seen++ < header_lines || episode_of(line) <= episode) {
      kept += line + "\n";
    }
  }
  in.close();
  WriteTextFile(path, kept);
}

long long CsvEpisode(const std::string& line) {
  return std::stoll(line.substr(0, line.find(',')));
}

long long JsonlEpisode(const std::string& line) {
  return json::parse(line).at("episode").get<long long>();
}

Profile ProfileOf(const LearnerState& state) {
  Profile p;
  for (const auto& player : state.players) p.push_back(player.rho.values);
  return p;
}

json ProfileToJson(const Profile& p) {
  json out = json::array();
  for (const auto& v : p) out.push_back(std::vector<double>(v.begin(), v.end()));
  return out;
}

Profile ProfileFromJson(const json& j) {
  Profile p;
  for (const auto& v : j) {
    const auto values = v.get<std::vector<double>>();
    p.push_back(Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                  values.size()));
  }
  return p;
}

void RequireEnumerable(const Game& game) {
  if (!game.Enumerable()) {
    throw EnumerationTooLarge(game.JointSize(), game.enumeration_cap());
  }
}

std::string SummaryText(const RunReport& r, const std::string& game_hash) {
  std::ostringstream s;
  s << "game_hash = " << game_hash << "\n";
  s << "episodes = " << r.episodes << "\n";
  s << "aborted = " << (r.aborted ? "true" : "false") << "\n";
  if (r.aborted) s << "abort_reason = " << r.abort_reason << "\n";
  s << "tau = " << Fmt(r.tau) << "\n";
  s << "burn_in = " << r.burn_in << "\n";
  s << "delta =";
  for (double d : r.delta) s << " " << Fmt(d);
  s << "\n";
  s << "mean_batch_length = " << Fmt(r.mean_batch_length) << "\n";
  s << "max_batch_length = " << r.max_batch_length << "\n";
  for (std::size_t i = 0; i < r.trailing_mean_reward.size(); ++i) {
    s << "trailing_mean_reward[" << i << "] = "
      << Fmt(r.trailing_mean_reward[i]) << "\n";
  }
  if (r.averaged_gap) s << "averaged_gap = " << Fmt(*r.averaged_gap) << "\n";
  if (r.average_gap) s << "average_gap = " << Fmt(*r.average_gap) << "\n";
  s << "wall_seconds = " << Fmt(r.wall_seconds) << "\n";
  return s.str();
}

// Runs `count` tasks on up to `jobs` threads; the first exception is
// rethrown after every worker has finished.
template <typename Task>
void ParallelFor(int count, int jobs, Task task) {
  std::atomic<int> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    for (int k = next++; k < count; k = next++) {
      try {
        task(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min(jobs, count));
  std::vector<std::thread> threads;
  for (int w = 1; w < workers; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace

ExperimentConfig ParseConfig(const json& j, const fs::path& base_dir) {
  const Fields f(j, "");
  f.Allow({"game", "algorithm", "schedule", "regularizer", "burn_in",
           "delta", "epsilon", "tau", "tau_samples", "episodes", "seed",
           "batch_cap", "fixed_batch_len", "fixed_batch_factor", "threads",
           "logging", "out"});
  ExperimentConfig c;
  c.base_dir = base_dir;
  if (!f.Has("game")) throw ConfigError("config field 'game' is missing");
  c.game = f.Raw("game");
  CheckGameSpec(c.game, base_dir);

  const std::string algo = f.Get<std::string>("algorithm", "DA");
  if (algo == "DA") {
    c.algorithm = Algorithm::kDualAveraging;
  } else if (algo == "MD") {
    c.algorithm = Algorithm::kMirrorDescent;
  } else {
    throw ConfigError("config field 'algorithm': expected \"DA\" or \"MD\"");
  }

  if (f.Has("schedule")) {
    const Fields s(f.Raw("schedule"), "schedule");
    const std::string kind = s.Get<std::string>("kind");
    if (kind == "inverse_power") {
      s.Allow({"kind", "beta"});
      const double beta = s.Get<double>("beta");
      if (!(beta > 0.5 && beta <= 1.0)) {
        throw ConfigError("config field 'schedule.beta': must lie in (0.5, 1]");
      }
      c.schedule = Schedule::InversePower(beta);
    } else if (kind == "theorem5") {
      s.Allow({"kind", "beta"});
      const double beta = s.Get<double>("beta");
      if (!(beta > 0.0)) {
        throw ConfigError("config field 'schedule.beta': must be positive");
      }
      c.schedule = Schedule::Theorem5(beta);
    } else if (kind == "scaled_inverse") {
      s.Allow({"kind", "c"});
      const double scale = s.Get<double>("c");
      if (!(scale > 0.0)) {
        throw ConfigError("config field 'schedule.c': must be positive");
      }
      c.schedule = Schedule::ScaledInverse(scale);
    } else {
      throw ConfigError("config field 'schedule.kind': unknown kind '" + kind +
                        "' (expected inverse_power, theorem5 or "
                        "scaled_inverse)");
    }
  }

  if (f.Has("regularizer")) {
    const Fields r(f.Raw("regularizer"), "regularizer");
    r.Allow({"kind", "c"});
    const std::string kind = r.Get<std::string>("kind");
    if (kind == "quadratic") {
      const double coef = r.Get<double>("c");
      if (!(coef > 0.0)) {
        throw ConfigError("config field 'regularizer.c': must be positive");
      }
      c.regularizer = Regularizer::Quadratic(coef);
    } else if (kind == "entropy") {
      c.regularizer = Regularizer::Entropy();
    } else {
      throw ConfigError("config field 'regularizer.kind': expected quadratic "
                        "or entropy");
    }
  }
  if (c.algorithm == Algorithm::kDualAveraging &&
      c.regularizer.kind != Regularizer::Kind::kQuadratic) {
    throw ConfigError("config field 'regularizer': DA needs a quadratic "
                      "regularizer");
  }

  if (f.Has("burn_in") && !f.Raw("burn_in").is_string()) {
    c.burn_in = f.Get<long long>("burn_in");
    CheckRange<long long>("burn_in", *c.burn_in, 1, 1LL << 40);
  } else if (f.Has("burn_in") && f.Get<std::string>("burn_in") != "auto") {
    throw ConfigError("config field 'burn_in': expected an integer or \"auto\"");
  }

  if (f.Has("delta")) {
    const json& d = f.Raw("delta");
    if (d.is_string()) {
      if (d.get<std::string>() != "auto") {
        throw ConfigError("config field 'delta': expected a number, an array "
                          "or \"auto\"");
      }
    } else if (d.is_array()) {
      for (const auto& v : d) c.delta.push_back(Fields::As<double>(v, "delta"));
    } else {
      c.delta.push_back(f.Get<double>("delta"));
    }
    for (double v : c.delta) CheckRange("delta", v, 0.0, 1.0);
  }

  c.epsilon = f.Get<double>("epsilon", c.epsilon);
  CheckRange("epsilon", c.epsilon, 1e-12, 1e6);

  if (f.Has("tau") && !f.Raw("tau").is_string()) {
    c.tau = f.Get<double>("tau");
    CheckRange("tau", *c.tau, 1.0, 1e9);
  } else if (f.Has("tau") && f.Get<std::string>("tau") != "auto") {
    throw ConfigError("config field 'tau': expected a number or \"auto\"");
  }
  c.tau_samples = f.Get<int>("tau_samples", c.tau_samples);
  CheckRange("tau_samples", c.tau_samples, 1, 1000000);

  c.episodes = f.Get<long long>("episodes", c.episodes);
  CheckRange<long long>("episodes", c.episodes, 0, 1LL << 40);
  c.seed = f.Get<std::uint64_t>("seed", c.seed);
  c.batch_cap = f.Get<long long>("batch_cap", 0);
  CheckRange<long long>("batch_cap", c.batch_cap, 0, 1LL << 50);
  if (f.Has("fixed_batch_len")) {
    if (f.Raw("fixed_batch_len").is_string()) {
      if (f.Get<std::string>("fixed_batch_len") != "auto") {
        throw ConfigError("config field 'fixed_batch_len': expected an "
                          "integer or \"auto\"");
      }
      c.fixed_batch_auto = true;
    } else {
      c.fixed_batch_len = f.Get<long long>("fixed_batch_len");
      CheckRange<long long>("fixed_batch_len", c.fixed_batch_len, 0, 1LL << 40);
    }
  }
  c.fixed_batch_factor = f.Get<double>("fixed_batch_factor", 1.0);
  CheckRange("fixed_batch_factor", c.fixed_batch_factor, 1e-6, 1e6);
  c.threads = f.Get<int>("threads", 1);
  CheckRange("threads", c.threads, 1, 1024);

  if (f.Has("logging")) {
    const Fields l(f.Raw("logging"), "logging");
    l.Allow({"thin", "gap_every", "include_burn_in_reward",
             "checkpoint_every", "iterates"});
    c.logging.thin = l.Get<long long>("thin", 1);
    CheckRange<long long>("logging.thin", c.logging.thin, 1, 1LL << 40);
    c.logging.gap_every = l.Get<long long>("gap_every", 0);
    CheckRange<long long>("logging.gap_every", c.logging.gap_every, 0,
                          1LL << 40);
    c.logging.include_burn_in_reward =
        l.Get<bool>("include_burn_in_reward", true);
    c.logging.checkpoint_every = l.Get<long long>("checkpoint_every", 0);
    CheckRange<long long>("logging.checkpoint_every",
                          c.logging.checkpoint_every, 0, 1LL << 40);
    c.logging.iterates = l.Get<bool>("iterates", false);
  }
  c.out_dir = f.Get<std::string>("out", c.out_dir.string());
  return c;
}

ExperimentConfig LoadConfig(const fs::path& path) {
  if (!fs::exists(path)) {
    throw InputError("config file " + path.string() + " does not exist");
  }
  ExperimentConfig c = ParseConfig(ReadJsonFile(path), path.parent_path());
  if (const char* seed = std::getenv("OCCGAME_SEED")) {
    try {
      std::size_t used = 0;
      c.seed = std::stoull(seed, &used);
      if (used != std::string(seed).size()) throw std::invalid_argument(seed);
    } catch (const std::exception&) {
      throw ConfigError(std::string("OCCGAME_SEED is not an integer: ") + seed);
    }
  }
  if (const char* out = std::getenv("OCCGAME_OUT")) c.out_dir = out;
  return c;
}

json ConfigToJson(const ExperimentConfig& c) {
  json j = {{"game", c.game},
            {"algorithm", AlgorithmName(c.algorithm)},
            {"schedule", ScheduleToJson(c.schedule)},
            {"regularizer", RegularizerToJson(c.regularizer)},
            {"epsilon", c.epsilon},
            {"tau_samples", c.tau_samples},
            {"episodes", c.episodes},
            {"seed", c.seed},
            {"batch_cap", c.batch_cap},
            {"fixed_batch_factor", c.fixed_batch_factor},
            {"threads", c.threads},
            {"logging",
             {{"thin", c.logging.thin},
              {"gap_every", c.logging.gap_every},
              {"include_burn_in_reward", c.logging.include_burn_in_reward},
              {"checkpoint_every", c.logging.checkpoint_every},
              {"iterates", c.logging.iterates}}},
            {"out", c.out_dir.string()}};
  j["burn_in"] = c.burn_in ? json(*c.burn_in) : json("auto");
  j["delta"] = c.delta.empty() ? json("auto") : json(c.delta);
  j["tau"] = c.tau ? json(*c.tau) : json("auto");
  j["fixed_batch_len"] =
      c.fixed_batch_auto ? json("auto") : json(c.fixed_batch_len);
  return j;
}

Game BuildGame(const ExperimentConfig& c) {
  const Fields f(c.game, "game");
  Game game = [&]() -> Game {
    if (f.Has("preset")) {
      const std::string preset = f.Get<std::string>("preset");
      if (preset == "smart_grid") {
        std::vector<int> harvest = {4};
        if (f.Has("harvest")) harvest = IntList(f.Raw("harvest"), "harvest");
        return SmartGridGame(
            f.Get<int>("n"), f.Get<int>("capacity", 7), harvest,
            f.Get<double>("lambda", 0.0),
            f.Get<std::vector<double>>("utility_exponents", {}));
      }
      std::vector<int> states = IntList(f.Raw("state_sizes"), "state_sizes");
      std::vector<int> actions = IntList(f.Raw("action_sizes"), "action_sizes");
      const std::uint64_t seed = f.Get<std::uint64_t>("seed", 0);
      if (preset == "zero_sum") {
        if (states.size() == 1) states.assign(2, states[0]);
        if (actions.size() == 1) actions.assign(2, actions[0]);
        return ZeroSumTwoPlayer(states, actions, seed);
      }
      const int n = f.Get<int>(
          "n", static_cast<int>(std::max(states.size(), actions.size())));
      if (states.size() == 1) states.assign(n, states[0]);
      if (actions.size() == 1) actions.assign(n, actions[0]);
      return RandomGame(n, states, actions, seed);
    }
    if (f.Has("file")) {
      return GameFromJson(ReadJsonFile(c.base_dir / f.Get<std::string>("file")));
    }
    return GameFromJson(f.Raw("inline"));
  }();
  if (f.Has("enumeration_cap")) {
    game.set_enumeration_cap(f.Get<double>("enumeration_cap"));
  }
  return game;
}

ResolvedRun ResolveRun(const ExperimentConfig& c, const Game& game) {
  ResolvedRun r;
  if (c.tau) {
    r.tau = *c.tau;
  } else {
    for (int i = 0; i < game.num_players(); ++i) {
      r.tau = std::max(
          r.tau, MixingTimeBound(game.chain(i), c.tau_samples, 1000 + i).tau);
    }
  }
  RunOptions& o = r.options;
  o.algorithm = c.algorithm;
  o.schedule = c.schedule;
  o.regularizer = c.regularizer;
  o.burn_in = c.burn_in ? *c.burn_in : AutoBurnIn(game, r.tau, c.epsilon);
  if (c.delta.empty()) {
    for (int i = 0; i < game.num_players(); ++i) {
      o.delta.push_back(ComputeDelta(game.chain(i), c.epsilon));
    }
  } else {
    o.delta = c.delta;
  }
  o.episodes = c.episodes;
  o.seed = c.seed;
  o.tau = r.tau;
  o.batch_cap = c.batch_cap;
  o.fixed_length = c.fixed_batch_auto
                       ? AutoFixedLength(game, r.tau, c.fixed_batch_factor)
                       : c.fixed_batch_len;
  o.threads = c.threads;
  return r;
}

void GapAccumulator::Add(const Game& game, const Profile& rho, double eta) {
  const int n = game.num_players();
  if (gradient_sum.empty()) {
    for (int i = 0; i < n; ++i) {
      gradient_sum.push_back(Eigen::VectorXd::Zero(game.chain(i).dim()));
    }
    payoff_sum.assign(n, 0.0);
  }
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd g = ExactGradient(game, rho, i);
    gradient_sum[i] += eta * g;
    payoff_sum[i] += eta * g.dot(rho[i]);
  }
  weight_sum += eta;
}

double GapAccumulator::AveragedGap(
    const std::vector<OccupationPolytope>& polytopes) const {
  if (weight_sum <= 0.0) throw InputError("no iterates accumulated");
  double total = 0.0;
  for (std::size_t i = 0; i < gradient_sum.size(); ++i) {
    total += BestResponseValue(polytopes[i], gradient_sum[i]).value -
             payoff_sum[i];
  }
  return total / weight_sum;
}

json GapAccumulator::ToJson() const {
  json grads = json::array();
  for (const auto& g : gradient_sum) {
    grads.push_back(std::vector<double>(g.begin(), g.end()));
  }
  return {{"gradient_sum", grads},
          {"payoff_sum", payoff_sum},
          {"weight_sum", weight_sum}};
}

GapAccumulator GapAccumulator::FromJson(const json& j) {
  GapAccumulator a;
  a.gradient_sum = ProfileFromJson(j.at("gradient_sum"));
  a.payoff_sum = j.at("payoff_sum").get<std::vector<double>>();
  a.weight_sum = j.at("weight_sum").get<double>();
  return a;
}

RunReport RunExperiment(const ExperimentConfig& config,
                        const std::optional<fs::path>& resume,
                        std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const Game game = BuildGame(config);
  const std::string game_hash = GameHash(game);
  const ResolvedRun resolved = ResolveRun(config, game);
  const RunOptions& options = resolved.options;
  const bool gaps = config.logging.gap_every > 0;
  if (gaps) RequireEnumerable(game);
  const auto polytopes = PlayerPolytopes(game, options.delta);
  const std::string run_hash = RunHash(game_hash, resolved);
  const int n = game.num_players();

  const fs::path out = config.out_dir;
  fs::create_directories(out);
  const fs::path csv_path = out / "trajectory.csv";
  const fs::path iterates_path = out / "iterates.jsonl";
  json resolved_config = ConfigToJson(config);
  resolved_config["resolved"] = {{"tau", resolved.tau},
                                 {"burn_in", options.burn_in},
                                 {"delta", options.delta},
                                 {"fixed_batch_len", options.fixed_length},
                                 {"game_hash", game_hash},
                                 {"run_hash", run_hash}};
  WriteTextFile(out / "config.json", resolved_config.dump(2) + "\n");

  LearnerState state;
  GapAccumulator acc;
  if (resume) {
    const json ckpt = ReadJsonFile(*resume);
    if (ckpt.value("format", "") != kCheckpointFormat) {
      throw InputError(resume->string() + " is not a run checkpoint");
    }
    if (ckpt.value("run_hash", "") != run_hash) {
      throw InputError(resume->string() +
                       " was written by a run with different settings (run "
                       "hash " + ckpt.value("run_hash", "?") + ", expected " +
                       run_hash + ")");
    }
    state = CheckpointFromJson(ckpt.at("learner"), game_hash);
    if (gaps) {
      if (!ckpt.contains("gap")) {
        throw InputError(resume->string() + " has no gap accumulator");
      }
      acc = GapAccumulator::FromJson(ckpt.at("gap"));
    }
    if (state.episode > config.episodes) {
      throw InputError("checkpoint is at episode " +
                       std::to_string(state.episode) + ", past the configured " +
                       std::to_string(config.episodes));
    }
    TruncateByEpisode(csv_path, state.episode, 1, CsvEpisode);
    TruncateByEpisode(iterates_path, state.episode, 1, JsonlEpisode);
    log << "resuming at episode " << state.episode << " from "
        << resume->string() << "\n";
  } else {
    state = InitLearner(game, options, polytopes);
    WriteTextFile(csv_path, std::string(kCsvHeader) + "\n");
    if (config.logging.iterates) {
      WriteTextFile(iterates_path,
                    json{{"format", kIteratesFormat},
                         {"game_hash", game_hash}}
                            .dump() + "\n");
    } else if (fs::exists(iterates_path)) {
      fs::remove(iterates_path);
    }
  }

  std::ofstream csv(csv_path, std::ios::app);
  std::ofstream iterates;
  if (config.logging.iterates) iterates.open(iterates_path, std::ios::app);
  if (!csv || (config.logging.iterates && !iterates)) {
    throw InputError("cannot append to outputs in " + out.string());
  }
  fs::create_directories(out / "checkpoints");
  auto checkpoint = [&](const fs::path& path) {
    json j = {{"format", kCheckpointFormat},
              {"run_hash", run_hash},
              {"learner", CheckpointToJson(state, game_hash)}};
    if (gaps) j["gap"] = acc.ToJson();
    WriteTextFile(path, j.dump() + "\n");
  };

  RunReport report;
  report.tau = resolved.tau;
  report.burn_in = options.burn_in;
  report.delta = options.delta;
  while (state.episode < config.episodes) {
    const long long k = state.episode + 1;
    const Profile played = ProfileOf(state);
    const double eta = StepSize(options.schedule, k);
    if (gaps) acc.Add(game, played, eta);
    if (config.logging.iterates) {
      iterates << json{{"episode", k}, {"eta", eta},
                       {"rho", ProfileToJson(played)}}
                      .dump()
               << "\n";
    }
    EpisodeRecord rec;
    try {
      rec = RunEpisode(game, options, polytopes, state);
    } catch (const BatchCapExceeded& e) {
      report.aborted = true;
      report.abort_reason =
          std::string(e.what()) + " in episode " + std::to_string(k);
      log << "aborted: " << report.abort_reason << "\n";
      break;
    }
    const bool last = k == config.episodes;
    if (k % config.logging.thin == 0 || last) {
      std::string avg_gap, gap;
      if (gaps && (k % config.logging.gap_every == 0 || last)) {
        avg_gap = Fmt(acc.AveragedGap(polytopes));
        gap = Fmt(NiGap(game, state.average, polytopes));
      }
      for (int i = 0; i < n; ++i) {
        const double shown = config.logging.include_burn_in_reward
                                 ? rec.mean_reward[i]
                                 : rec.mean_reward_sampling[i];
        csv << k << ',' << i << ',' << Fmt(shown) << ','
            << rec.batch_length() << ',' << Fmt(rec.eta) << ','
            << Fmt(rec.mean_reward[i]) << ','
            << Fmt(rec.mean_reward_sampling[i]) << ','
            << Fmt(rec.uncovered_fraction[i]) << ',' << avg_gap << ','
            << gap << '\n';
      }
    }
    if (config.logging.checkpoint_every > 0 &&
        k % config.logging.checkpoint_every == 0) {
      csv.flush();
      if (iterates.is_open()) iterates.flush();
      checkpoint(out / "checkpoints" /
                 ("checkpoint_" + std::to_string(k) + ".json"));
    }
  }
  csv.close();
  if (iterates.is_open()) iterates.close();
  checkpoint(out / "checkpoint.json");

  report.episodes = state.episode;
  if (gaps && acc.weight_sum > 0.0) {
    report.averaged_gap = acc.AveragedGap(polytopes);
    report.average_gap = NiGap(game, state.average, polytopes);
  }
  const auto rows = ReadTrajectory(csv_path);
  std::vector<std::vector<double>> rewards(n);
  double length_sum = 0.0;
  long long length_count = 0;
  for (const auto& r : rows) {
    rewards.at(r.player).push_back(r.mean_reward);
    if (r.player == 0) {
      length_sum += static_cast<double>(r.batch_len);
      ++length_count;
      report.max_batch_length = std::max(report.max_batch_length, r.batch_len);
    }
  }
  report.mean_batch_length = length_count > 0 ? length_sum / length_count : 0.0;
  for (int i = 0; i < n; ++i) {
    report.trailing_mean_reward.push_back(
        TrailingMean(rewards[i], kTrailingWindow));
  }
  report.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
  WriteTextFile(out / "summary.txt", SummaryText(report, game_hash));
  log << "wrote " << report.episodes << " episodes to " << out.string()
      << "\n";
  return report;
}

std::vector<RunReport> RunSweep(const ExperimentConfig& config, int seeds,
                                int jobs, std::ostream& log) {
  if (seeds < 1) throw InputError("a sweep needs at least one seed");
  std::vector<RunReport> reports(seeds);
  std::vector<std::ostringstream> logs(seeds);
  ParallelFor(seeds, jobs, [&](int k) {
    ExperimentConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(k);
    c.out_dir = config.out_dir / ("seed_" + std::to_string(c.seed));
    reports[k] = RunExperiment(c, std::nullopt, logs[k]);
  });
  for (const auto& l : logs) log << l.str();
  return reports;
}

int EvaluateGaps(const ExperimentConfig& config, const fs::path& input,
                 long long every, const fs::path& out_dir, std::ostream& log) {
  if (every < 1) throw InputError("--every must be positive");
  const Game game = BuildGame(config);
  RequireEnumerable(game);
  const std::string game_hash = GameHash(game);
  const ResolvedRun resolved = ResolveRun(config, game);
  const auto polytopes = PlayerPolytopes(game, resolved.options.delta);
  if (!fs::exists(input)) {
    throw InputError("input " + input.string() + " does not exist");
  }
  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "episode,averaged_gap,average_gap,last_gap\n";
  int points = 0;

  std::ifstream in(input);
  std::string first;
  std::getline(in, first);
  json head;
  try {
    head = json::parse(first);
  } catch (const json::parse_error&) {
    in.close();
    head = ReadJsonFile(input);
  }
  if (head.value("format", "") == kIteratesFormat) {
    if (head.value("game_hash", "") != game_hash) {
      throw InputError(input.string() + " was written for game " +
                       head.value("game_hash", "?") +
                       " but the configured game hashes to " + game_hash);
    }
    GapAccumulator acc;
    Profile average, last;
    std::string line;
    long long episode = 0;
    auto emit = [&] {
      csv << episode << ',' << Fmt(acc.AveragedGap(polytopes)) << ','
          << Fmt(NiGap(game, average, polytopes)) << ','
          << Fmt(NiGap(game, last, polytopes)) << '\n';
      ++points;
    };
    bool pending = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      episode = rec.at("episode").get<long long>();
      const double eta = rec.at("eta").get<double>();
      last = ProfileFromJson(rec.at("rho"));
      if (last.size() != static_cast<std::size_t>(game.num_players())) {
        throw InputError(input.string() + ": wrong player count in episode " +
                         std::to_string(episode));
      }
      acc.Add(game, last, eta);
      if (average.empty()) {
        average = last;
      } else {
        for (std::size_t i = 0; i < last.size(); ++i) {
          average[i] += (eta / acc.weight_sum) * (last[i] - average[i]);
        }
      }
      pending = true;
      if (episode % every == 0) {
        emit();
        pending = false;
      }
    }
    if (pending) emit();
  } else if (head.value("format", "") == kCheckpointFormat) {
    const LearnerState state =
        CheckpointFromJson(head.at("learner"), game_hash);
    std::string averaged;
    if (head.contains("gap")) {
      averaged =
          Fmt(GapAccumulator::FromJson(head.at("gap")).AveragedGap(polytopes));
    }
    csv << state.episode << ',' << averaged << ','
        << Fmt(NiGap(game, state.average, polytopes)) << ','
        << Fmt(NiGap(game, ProfileOf(state), polytopes)) << '\n';
    points = 1;
  } else {
    throw InputError(input.string() +
                     " is neither a run checkpoint nor an iterates file");
  }
  WriteTextFile(out_dir / "gap.csv", csv.str());
  log << "wrote " << points << " gap evaluations to "
      << (out_dir / "gap.csv").string() << "\n";
  return points;
}

ExperimentConfig FigureConfig(int num_players, double lambda,
                              const ReproduceOptions& options) {
  ExperimentConfig c;
  c.game = {{"preset", "smart_grid"},
            {"n", num_players},
            {"capacity", 7},
            {"harvest", {4}},
            {"lambda", lambda}};
  c.algorithm = Algorithm::kDualAveraging;
  c.schedule = Schedule::ScaledInverse(0.02);
  c.regularizer = Regularizer::Quadratic(1000.0);
  c.burn_in = 500;
  c.delta = {7.8125e-4};
  c.tau = options.tau;
  c.episodes = options.episodes;
  c.seed = options.seed;
  c.fixed_batch_len = options.fixed_batch_len;
  std::ostringstream name;
  name << "smart_grid_n" << num_players << "_lambda" << lambda;
  c.out_dir = options.out_dir / name.str();
  return c;
}

std::vector<FigureRun> Reproduce(const ReproduceOptions& options,
                                 std::ostream& log) {
  std::vector<std::pair<int, double>> runs;
  if (options.figure == "fig2") {
    runs = {{2, 0.0}, {5, 0.0}};
  } else if (options.figure == "fig3a") {
    runs = {{2, 1.5}};
  } else if (options.figure == "fig3b") {
    runs = {{5, 1.5}};
  } else {
    throw InputError("unknown figure '" + options.figure +
                     "' (expected fig2, fig3a or fig3b)");
  }
  std::vector<FigureRun> out(runs.size());
  std::vector<std::ostringstream> logs(runs.size());
  ParallelFor(static_cast<int>(runs.size()), options.jobs, [&](int k) {
    const auto [n, lambda] = runs[k];
    const ExperimentConfig c = FigureConfig(n, lambda, options);
    FigureRun& fr = out[k];
    fr.name = c.out_dir.filename().string();
    fr.num_players = n;
    fr.lambda = lambda;
    fr.report = RunExperiment(c, std::nullopt, logs[k]);
    for (const auto& rewards : ReadRewardColumns(c.out_dir / "trajectory.csv")) {
      fr.oscillation.push_back(
          WindowedOscillation(rewards, options.window, options.stabilize_after));
    }
  });
  for (const auto& l : logs) log << l.str();

  // Plot-ready table: per-episode reward and its trailing-window mean.
  std::ostringstream table;
  table << "run,n,lambda,episode,player,mean_reward,window_mean\n";
  std::ostringstream summary;
  summary << "figure = " << options.figure << "\n"
          << "episodes = " << options.episodes << "\n"
          << "seed = " << options.seed << "\n"
          << "window = " << options.window << "\n"
          << "stabilize_after = " << options.stabilize_after << "\n";
  for (const auto& fr : out) {
    const fs::path dir = options.out_dir / fr.name;
    const auto rewards = ReadRewardColumns(dir / "trajectory.csv");
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      double sum = 0.0;
      const auto& r = rewards[i];
      for (std::size_t k = 0; k < r.size(); ++k) {
        sum += r[k];
        if (k >= static_cast<std::size_t>(options.window)) {
          sum -= r[k - options.window];
        }
        const double count = static_cast<double>(
            std::min<std::size_t>(k + 1, options.window));
        table << fr.name << ',' << fr.num_players << ',' << Fmt(fr.lambda)
              << ',' << k + 1 << ',' << i << ',' << Fmt(r[k]) << ','
              << Fmt(sum / count) << '\n';
      }
      summary << fr.name << ".trailing_mean_reward[" << i
              << "] = " << Fmt(fr.report.trailing_mean_reward[i]) << "\n"
              << fr.name << ".oscillation[" << i
              << "] = " << Fmt(fr.oscillation[i]) << "\n";
    }
    summary << fr.name << ".aborted = "
            << (fr.report.aborted ? "true" : "false") << "\n"
            << fr.name << ".mean_batch_length = "
            << Fmt(fr.report.mean_batch_length) << "\n"
            << fr.name << ".tau = " << Fmt(fr.report.tau) << "\n";
  }
  fs::create_directories(options.out_dir);
  WriteTextFile(options.out_dir / (options.figure + ".csv"), table.str());
  WriteTextFile(options.out_dir / (options.figure + "_summary.txt"),
                summary.str());
  return out;
}

double TrailingMean(const std::vector<double>& values, long long window) {
  if (values.empty()) return 0.0;
  const std::size_t count =
      std::min<std::size_t>(values.size(), static_cast<std::size_t>(window));
  double sum = 0.0;
  for (std::size_t k = values.size() - count; k < values.size(); ++k) {
    sum += values[k];
  }
  return sum / static_cast<double>(count);
}

double WindowedOscillation(const std::vector<double>& values, long long window,
                           long long after) {
  if (window < 1) throw InputError("window must be positive");
  const long long n = static_cast<long long>(values.size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double sum = 0.0;
  for (long long k = 0; k < n; ++k) {
    sum += values[k];
    if (k >= window) sum -= values[k - window];
    if (k + 1 >= window && k + 1 > after) {
      const double mean = sum / static_cast<double>(window);
      lo = std::min(lo, mean);
      hi = std::max(hi, mean);
    }
  }
  return hi >= lo ? hi - lo : 0.0;
}

std::vector<std::vector<double>> ReadRewardColumns(const fs::path& csv) {
  std::vector<std::vector<double>> out;
  for (const auto& r : ReadTrajectory(csv)) {
    if (r.player >= static_cast<int>(out.size())) out.resize(r.player + 1);
    out[r.player].push_back(r.mean_reward);
  }
  return out;
}

}  // namespace occgame
