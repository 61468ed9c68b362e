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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "occgame/experiment.h"
#include "occgame/linprog.h"
#include "occgame/occupancy.h"
#include "occgame/projection.h"

namespace occgame {
namespace {

// Row floor + (1 - |A| floor) * Dirichlet(1).
Policy RandomPolicy(int ns, int na, Stream& stream, double floor) {
  Policy pi{ns, na, std::vector<double>(ns * na)};
  for (int s = 0; s < ns; ++s) {
    double total = 0.0;
    for (int a = 0; a < na; ++a) {
      pi(s, a) = -std::log1p(-stream.Uniform());
      total += pi(s, a);
    }
    for (int a = 0; a < na; ++a) {
      pi(s, a) = floor + (1.0 - na * floor) * pi(s, a) / total;
    }
  }
  return pi;
}

Eigen::VectorXd RandomVector(int dim, Stream& stream, double scale) {
  Eigen::VectorXd v(dim);
  for (int k = 0; k < dim; ++k) v(k) = scale * (2.0 * stream.Uniform() - 1.0);
  return v;
}

// Fault injection shifts the checked quantity by this much.
constexpr double kFault = 1e-3;

struct Check {
  double worst = 0.0;
  double limit = 0.0;
  const char* what = "";
};

std::string Describe(const std::vector<Check>& checks, bool& passed) {
  std::ostringstream s;
  passed = true;
  for (const auto& c : checks) {
    const bool ok = c.worst <= c.limit;
    passed = passed && ok;
    s << c.what << " " << c.worst << (ok ? " <= " : " > ") << c.limit << "; ";
  }
  return s.str();
}

std::vector<Check> RoundtripSuite(int samples, bool fault, Stream& stream) {
  Check err{0.0, 1e-7, "max roundtrip error"};
  for (int k = 0; k < samples; ++k) {
    const Game g = RandomGame(1, {3}, {3}, stream());
    const PlayerChain& chain = g.chain(0);
    const OccupationMeasure rho =
        OccupationFromPolicy(chain, RandomPolicy(3, 3, stream, 0.02));
    OccupationMeasure back = OccupationFromPolicy(
        chain, PolicyFromOccupation(rho).policy);
    if (fault) back.values(0) += kFault;
    err.worst = std::max(
        err.worst, (back.values - rho.values).lpNorm<Eigen::Infinity>());
  }
  return {err};
}

std::vector<Check> ProjectionSuite(int samples, bool fault, Stream& stream) {
  Check kkt{0.0, 1e-8, "max KKT residual"};
  Check idem{0.0, 1e-9, "max idempotence error"};
  Check nonexp{0.0, 1e-9, "max nonexpansiveness excess"};
  Check pyth{0.0, 1e-7, "max Pythagorean deficit"};
  for (int k = 0; k < samples; ++k) {
    const int ns = 2 + static_cast<int>(stream() % 2);
    const Game g = RandomGame(1, {ns}, {2}, stream());
    const PlayerChain& chain = g.chain(0);
    const OccupationPolytope full = BuildPolytope(chain);
    const double delta = 0.5 * full.max_floor() * stream.Uniform();
    const OccupationPolytope poly = Shrink(full, delta);
    const Eigen::VectorXd y1 = RandomVector(chain.dim(), stream, 1.0);
    const Eigen::VectorXd y2 = RandomVector(chain.dim(), stream, 1.0);
    ProjectionResult p1 = EuclideanProjectDetailed(poly, y1);
    if (fault) p1.point(0) += kFault;
    const Eigen::VectorXd p2 = EuclideanProject(poly, y2);
    kkt.worst = std::max(kkt.worst, std::max(poly.EqualityResidual(p1.point),
                                             poly.BoundViolation(p1.point)));
    kkt.worst = std::max(kkt.worst, p1.kkt_residual);
    idem.worst = std::max(idem.worst,
                          (EuclideanProject(poly, p1.point) - p1.point).norm());
    nonexp.worst = std::max(
        nonexp.worst, (p1.point - p2).norm() - (y1 - y2).norm());

    // KL(z || q) >= KL(z || p) + KL(p || q) for z in the polytope.
    Eigen::VectorXd q(chain.dim());
    for (int x = 0; x < chain.dim(); ++x) q(x) = 0.05 + stream.Uniform();
    q /= q.sum();
    const KlProjectionResult p = KlProject(full, q);
    const Eigen::VectorXd z =
        OccupationFromPolicy(chain, RandomPolicy(ns, 2, stream, 0.0)).values;
    pyth.worst = std::max(pyth.worst, KlDivergence(z, p.point) +
                                          KlDivergence(p.point, q) -
                                          KlDivergence(z, q));
  }
  return {kkt, idem, nonexp, pyth};
}

std::vector<Check> LpSuite(int samples, bool fault, Stream& stream) {
  Check gap{0.0, 1e-9, "max duality gap"};
  Check match{0.0, 1e-9, "max mismatch vs deterministic policies"};
  for (int k = 0; k < samples; ++k) {
    const int ns = 2 + static_cast<int>(stream() % 2);
    const int na = 2 + static_cast<int>(stream() % 2);
    const Game g = RandomGame(1, {ns}, {na}, stream());
    const PlayerChain& chain = g.chain(0);
    const OccupationPolytope poly = BuildPolytope(chain);
    const Eigen::VectorXd c = RandomVector(chain.dim(), stream, 1.0);
    const BestResponse br = BestResponseValue(poly, c);
    gap.worst = std::max(gap.worst, br.certificate.duality_gap);
    // Irreducible chains: the vertices are the deterministic occupations.
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> choice(ns, 0);
    while (true) {
      Policy pi{ns, na, std::vector<double>(ns * na, 0.0)};
      for (int s = 0; s < ns; ++s) pi(s, choice[s]) = 1.0;
      best = std::max(best, c.dot(OccupationFromPolicy(chain, pi).values));
      int s = 0;
      while (s < ns && ++choice[s] == na) choice[s++] = 0;
      if (s == ns) break;
    }
    const double value = br.value + (fault ? kFault : 0.0);
    match.worst = std::max(match.worst, std::abs(value - best));
  }
  return {gap, match};
}

std::vector<Check> BiasSuite(const std::vector<long long>& burn_ins,
                             long long batches, bool fault,
                             std::uint64_t seed) {
  const Game g = RandomGame(2, {2, 2}, {2, 2}, seed);
  double tau = 1.0;
  for (int i = 0; i < 2; ++i) {
    tau = std::max(tau, MixingTimeBound(g.chain(i), 200, 1000 + i).tau);
  }
  Stream stream(seed ^ 0x5eedULL);
  const std::vector<Policy> policies = {RandomPolicy(2, 2, stream, 0.1),
                                        RandomPolicy(2, 2, stream, 0.1)};
  const auto report =
      EstimatorBiasReport(g, policies, burn_ins, batches, tau, seed);
  Check excess{-std::numeric_limits<double>::infinity(), 0.0,
               "max |bias| - bound"};
  for (const auto& e : report) {
    const double bias = std::abs(e.bias()) + (fault ? 1.0 : 0.0);
    excess.worst = std::max(excess.worst, bias - e.bound);
  }
  return {excess};
}

std::vector<Check> IndependenceSuite(long long steps, bool fault,
                                     std::uint64_t seed) {
  const Game g = RandomGame(2, {2, 2}, {2, 2}, seed);
  Stream stream(seed ^ 0x1dULL);
  const std::vector<Policy> policies = {RandomPolicy(2, 2, stream, 0.1),
                                        RandomPolicy(2, 2, stream, 0.1)};
  Streams streams = Streams::FromSeed(seed, 2);
  std::vector<int> state = {0, 0};
  std::vector<int> action(2);
  Eigen::Matrix2d joint = Eigen::Matrix2d::Zero();
  for (long long t = 0; t < steps; ++t) {
    for (int i = 0; i < 2; ++i) {
      action[i] = SampleAction(policies[i], state[i], streams.player[i]);
    }
    state = Step(g, state, action, streams.player);
    joint(state[0], state[1]) += 1.0;
  }
  joint /= static_cast<double>(steps);
  const Eigen::Vector2d m0 = joint.rowwise().sum();
  const Eigen::Vector2d m1 = joint.colwise().sum().transpose();
  double l1 = (joint - m0 * m1.transpose()).cwiseAbs().sum();
  if (fault) l1 += 1.0;
  return {{l1, 0.05, "L1(joint, product of marginals)"}};
}

}  // namespace

std::vector<SuiteResult> Validate(const ValidationOptions& options,
                                  std::ostream& log) {
  const bool full = options.level == ValidationLevel::kFull;
  const std::vector<std::string> known = {"roundtrip", "projection", "lp",
                                          "bias", "independence"};
  if (!options.inject_fault.empty() &&
      std::find(known.begin(), known.end(), options.inject_fault) ==
          known.end()) {
    throw InputError("unknown suite '" + options.inject_fault +
                     "' for fault injection");
  }
  const std::vector<long long> burn_ins =
      full ? std::vector<long long>{2, 4, 8, 16, 32}
           : std::vector<long long>{2, 8, 32};
  using Suite = std::function<std::vector<Check>(bool)>;
  const std::vector<std::pair<std::string, Suite>> suites = {
      {"roundtrip",
       [&](bool f) {
         Stream s(options.seed);
         return RoundtripSuite(full ? 200 : 50, f, s);
       }},
      {"projection",
       [&](bool f) {
         Stream s(options.seed + 1);
         return ProjectionSuite(full ? 500 : 100, f, s);
       }},
      {"lp",
       [&](bool f) {
         Stream s(options.seed + 2);
         return LpSuite(full ? 200 : 50, f, s);
       }},
      {"bias",
       [&](bool f) {
         return BiasSuite(burn_ins, full ? 100000 : 20000, f,
                          options.seed + 3);
       }},
      {"independence",
       [&](bool f) {
         return IndependenceSuite(full ? 100000 : 20000, f, options.seed + 4);
       }},
  };
  std::vector<SuiteResult> results;
  for (const auto& [name, suite] : suites) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult r;
    r.name = name;
    try {
      r.detail = Describe(suite(name == options.inject_fault), r.passed);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    log << (r.passed ? "PASS " : "FAIL ") << name << " (" << r.seconds
        << " s): " << r.detail << "\n";
    results.push_back(r);
  }
  return results;
}

}  // namespace occgame
