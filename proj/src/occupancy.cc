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

#include "occgame/occupancy.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "occgame/errors.h"
#include "occgame/linprog.h"
#include "occgame/projection.h"

namespace occgame {
namespace {

constexpr int kDenseStationaryLimit = 64;
constexpr double kStationaryResidual = 1e-10;

Eigen::VectorXd ToEigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

std::vector<double> ToStd(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd PowerIterationStationary(const Eigen::MatrixXd& kernel) {
  const int n = static_cast<int>(kernel.rows());
  // The lazy chain has the same stationary law and is aperiodic.
  const Eigen::MatrixXd lazy =
      0.5 * (kernel + Eigen::MatrixXd::Identity(n, n));
  Eigen::RowVectorXd nu = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < 1000000; ++it) {
    Eigen::RowVectorXd next = nu * lazy;
    next /= next.sum();
    const double change = (next - nu).lpNorm<1>();
    nu = next;
    if (change <= 1e-12) return nu.transpose();
  }
  throw NonErgodic("power iteration did not converge");
}

// Stationary laws of the closed communicating classes of `kernel`, each
// extended by zero to the full state space.
std::vector<Eigen::VectorXd> ClosedClassLaws(const Eigen::MatrixXd& kernel) {
  const int n = static_cast<int>(kernel.rows());
  // reach(i, j): j reachable from i in zero or more steps.
  Eigen::MatrixXi reach = Eigen::MatrixXi::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (kernel(i, j) > 0.0) reach(i, j) = 1;
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (!reach(i, k)) continue;
      for (int j = 0; j < n; ++j) {
        if (reach(k, j)) reach(i, j) = 1;
      }
    }
  }
  std::vector<Eigen::VectorXd> laws;
  std::vector<char> done(n, 0);
  for (int i = 0; i < n; ++i) {
    if (done[i]) continue;
    // i is recurrent iff everything it reaches reaches back.
    bool closed = true;
    for (int j = 0; j < n && closed; ++j) {
      if (reach(i, j) && !reach(j, i)) closed = false;
    }
    if (!closed) continue;
    std::vector<int> members;
    for (int j = 0; j < n; ++j) {
      if (reach(i, j)) members.push_back(j);
    }
    const int m = static_cast<int>(members.size());
    Eigen::MatrixXd sub(m, m);
    for (int a = 0; a < m; ++a) {
      done[members[a]] = 1;
      for (int b = 0; b < m; ++b) sub(a, b) = kernel(members[a], members[b]);
    }
    const Eigen::VectorXd local = StationaryDistribution(sub);
    Eigen::VectorXd law = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < m; ++a) law(members[a]) = local(a);
    laws.push_back(law);
  }
  return laws;
}

}  // namespace

double OccupationPolytope::EqualityResidual(const Eigen::VectorXd& x) const {
  return (equality_ * x - rhs_).lpNorm<Eigen::Infinity>();
}

double OccupationPolytope::BoundViolation(const Eigen::VectorXd& x) const {
  return std::max(0.0, delta_ - x.minCoeff());
}

OccupationPolytope BuildPolytope(const PlayerChain& chain, int player) {
  const int ns = chain.num_states();
  const int na = chain.num_actions();
  const int dim = ns * na;
  OccupationPolytope p;
  p.num_states_ = ns;
  p.num_actions_ = na;
  p.player_ = player;
  p.equality_ = Eigen::MatrixXd::Zero(ns + 1, dim);
  p.rhs_ = Eigen::VectorXd::Zero(ns + 1);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      const int col = s * na + a;
      for (int next = 0; next < ns; ++next) {
        p.equality_(next, col) += chain.Prob(s, a, next);
      }
      p.equality_(s, col) -= 1.0;
    }
  }
  p.equality_.row(ns).setOnes();
  p.rhs_(ns) = 1.0;

  // max t s.t. E (t 1 + x) = e, t >= 0, x >= 0.
  Eigen::MatrixXd lp_a(ns + 1, dim + 1);
  lp_a.col(0) = p.equality_.rowwise().sum();
  lp_a.rightCols(dim) = p.equality_;
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(dim + 1);
  cost(0) = 1.0;
  const LpResult lp = SolveStandardFormLp(lp_a, p.rhs_, cost);
  if (lp.status != LpStatus::kOptimal) {
    throw NumericalError("occupation polytope of player " +
                             std::to_string(player) + " has no feasible point",
                         0.0);
  }
  p.max_floor_ = lp.x(0);
  p.max_floor_point_ =
      lp.x.tail(dim) + Eigen::VectorXd::Constant(dim, lp.x(0));
  return p;
}

OccupationPolytope Shrink(const OccupationPolytope& polytope, double delta) {
  if (!(delta >= 0.0)) throw InputError("delta must be nonnegative");
  if (delta > polytope.max_floor() + 1e-12 ||
      delta * polytope.dim() >= 1.0 + 1e-12) {
    throw EmptyShrunkPolytope(polytope.player(), delta, polytope.max_floor());
  }
  OccupationPolytope shrunk = polytope;
  shrunk.delta_ = delta;
  return shrunk;
}

PolicyFromOccupationResult PolicyFromOccupation(const OccupationMeasure& rho) {
  PolicyFromOccupationResult out;
  out.policy = Policy::Uniform(rho.num_states, rho.num_actions);
  for (int s = 0; s < rho.num_states; ++s) {
    const double mass = rho.StateMass(s);
    if (!(mass > 0.0)) {
      out.fallback_states.push_back(s);
      continue;
    }
    for (int a = 0; a < rho.num_actions; ++a) {
      out.policy(s, a) = std::max(0.0, rho(s, a)) / mass;
    }
  }
  return out;
}

Eigen::MatrixXd InducedKernel(const PlayerChain& chain, const Policy& policy) {
  const int ns = chain.num_states();
  if (policy.num_states != ns || policy.num_actions != chain.num_actions()) {
    throw InputError("policy shape does not match chain");
  }
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ns, ns);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < chain.num_actions(); ++a) {
      const double w = policy(s, a);
      if (w == 0.0) continue;
      const auto row = chain.Row(s, a);
      for (int next = 0; next < ns; ++next) k(s, next) += w * row[next];
    }
  }
  return k;
}

Eigen::VectorXd StationaryDistribution(const Eigen::MatrixXd& kernel) {
  const int n = static_cast<int>(kernel.rows());
  if (kernel.cols() != n) throw InputError("kernel must be square");
  for (int s = 0; s < n; ++s) {
    if (std::abs(kernel.row(s).sum() - 1.0) > 1e-9 || kernel.row(s).minCoeff() < 0.0) {
      throw InputError("kernel row " + std::to_string(s) + " is not a distribution");
    }
  }
  if (n == 1) return Eigen::VectorXd::Ones(1);

  Eigen::VectorXd nu;
  if (n <= kDenseStationaryLimit) {
    const Eigen::MatrixXd balance =
        kernel.transpose() - Eigen::MatrixXd::Identity(n, n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_qr(balance);
    rank_qr.setThreshold(1e-10);
    if (rank_qr.rank() < n - 1) {
      throw NonErgodic("kernel has more than one recurrent class");
    }
    Eigen::MatrixXd system(n + 1, n);
    system.topRows(n) = balance;
    system.row(n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    nu = system.colPivHouseholderQr().solve(rhs);
  } else {
    nu = PowerIterationStationary(kernel);
  }
  nu = nu.cwiseMax(0.0);
  nu /= nu.sum();
  const double residual = (nu.transpose() * kernel - nu.transpose()).lpNorm<1>();
  if (residual > kStationaryResidual) {
    throw NonErgodic("stationary residual " + std::to_string(residual));
  }
  return nu;
}

OccupationMeasure OccupationFromPolicy(const PlayerChain& chain,
                                       const Policy& policy) {
  const Eigen::VectorXd nu =
      StationaryDistribution(InducedKernel(chain, policy));
  OccupationMeasure rho{chain.num_states(), chain.num_actions(),
                        Eigen::VectorXd(chain.dim())};
  for (int s = 0; s < chain.num_states(); ++s) {
    for (int a = 0; a < chain.num_actions(); ++a) {
      rho.values(s * chain.num_actions() + a) = nu(s) * policy(s, a);
    }
  }
  return rho;
}

double OccupationResidual(const PlayerChain& chain, const Eigen::VectorXd& rho) {
  const OccupationPolytope p = BuildPolytope(chain);
  return p.EqualityResidual(rho);
}

double ComputeDelta(const PlayerChain& chain, double epsilon,
                    const DeltaOptions& options) {
  const OccupationPolytope full = BuildPolytope(chain);
  if (options.override_delta) {
    Shrink(full, *options.override_delta);
    return *options.override_delta;
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InputError("epsilon must lie in (0,1)");
  }
  const int ns = chain.num_states();
  const int na = chain.num_actions();
  const double dim = static_cast<double>(ns) * na;
  if (std::pow(static_cast<double>(na), ns) > options.max_vertices) {
    throw InputError(
        "too many deterministic policies to certify delta; pass an explicit "
        "delta instead");
  }

  // Vertices of the full polytope: for every deterministic policy, the
  // occupation of each closed recurrent class of its induced chain.
  std::vector<Eigen::VectorXd> vertices;
  std::vector<int> choice(ns, 0);
  for (;;) {
    Policy det{ns, na, std::vector<double>(ns * na, 0.0)};
    for (int s = 0; s < ns; ++s) det(s, choice[s]) = 1.0;
    for (const Eigen::VectorXd& nu : ClosedClassLaws(InducedKernel(chain, det))) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(ns * na);
      for (int s = 0; s < ns; ++s) v(s * na + choice[s]) = nu(s);
      vertices.push_back(v);
    }
    int s = 0;
    while (s < ns && ++choice[s] == na) choice[s++] = 0;
    if (s == ns) break;
  }

  const double threshold = epsilon / std::sqrt(dim);
  for (int k = 1; k <= 40; ++k) {
    const double delta = std::ldexp(1.0, -k) / dim;
    if (delta > full.max_floor()) continue;
    const OccupationPolytope shrunk = Shrink(full, delta);
    double worst = 0.0;
    for (const auto& v : vertices) {
      worst = std::max(worst, (EuclideanProject(shrunk, v) - v).norm());
    }
    if (worst <= threshold) return delta;
  }
  throw InputError("no delta on the grid meets accuracy " +
                   std::to_string(epsilon) + "; use a larger epsilon");
}

MixingEstimate MixingTimeBound(const PlayerChain& chain, int samples,
                               std::uint64_t seed, double floor) {
  const int ns = chain.num_states();
  const int na = chain.num_actions();
  if (samples < 1) throw InputError("need at least one sampled policy");
  if (!(floor >= 0.0) || floor * na >= 1.0) {
    throw InputError("policy floor must satisfy 0 <= floor < 1/|A|");
  }
  // Q removes the mean of a row vector; x P for sum-zero x stays sum-zero.
  const Eigen::MatrixXd center =
      Eigen::MatrixXd::Identity(ns, ns) -
      Eigen::MatrixXd::Constant(ns, ns, 1.0 / ns);

  Stream stream(seed);
  MixingEstimate best;
  best.worst_policy = Policy::Uniform(ns, na);
  bool first = true;
  for (int k = 0; k < samples; ++k) {
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
    const Eigen::MatrixXd kernel = InducedKernel(chain, pi);
    StationaryDistribution(kernel);  // Throws NonErgodic.

    // Smallest power whose centered contraction is below one.
    double tau = 1.0;
    double contraction = 0.0;
    if (ns > 1) {
      Eigen::MatrixXd power = kernel;
      int steps = 1;
      for (;; ++steps) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(center * power);
        contraction = svd.singularValues()(0);
        if (contraction < 1.0 - 1e-12) break;
        if (steps >= 100 * ns) {
          throw NonErgodic("induced chain does not contract");
        }
        power = power * kernel;
      }
      if (contraction > 0.0) {
        tau = std::max(1.0, -steps / std::log(contraction));
      }
      contraction = std::pow(contraction, 1.0 / steps);
    }
    if (first || tau > best.tau) {
      best.tau = tau;
      best.contraction = contraction;
      best.worst_policy = pi;
      first = false;
    }
  }
  return best;
}

nlohmann::json OccupationToJson(const OccupationMeasure& rho) {
  return {{"num_states", rho.num_states},
          {"num_actions", rho.num_actions},
          {"values", ToStd(rho.values)}};
}

OccupationMeasure OccupationFromJson(const nlohmann::json& j) {
  OccupationMeasure rho{j.at("num_states").get<int>(),
                        j.at("num_actions").get<int>(),
                        ToEigen(j.at("values").get<std::vector<double>>())};
  if (rho.values.size() != rho.num_states * rho.num_actions) {
    throw InputError("occupation vector has wrong length");
  }
  return rho;
}

nlohmann::json PolytopeToJson(const OccupationPolytope& polytope) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < polytope.equality().rows(); ++r) {
    rows.push_back(ToStd(polytope.equality().row(r).transpose()));
  }
  return {{"num_states", polytope.num_states()},
          {"num_actions", polytope.num_actions()},
          {"player", polytope.player()},
          {"delta", polytope.delta()},
          {"equality", rows},
          {"rhs", ToStd(polytope.rhs())},
          {"max_floor", polytope.max_floor()},
          {"max_floor_point", ToStd(polytope.max_floor_point())}};
}

OccupationPolytope PolytopeFromJson(const nlohmann::json& j) {
  OccupationPolytope p;
  p.num_states_ = j.at("num_states").get<int>();
  p.num_actions_ = j.at("num_actions").get<int>();
  p.player_ = j.value("player", 0);
  p.delta_ = j.at("delta").get<double>();
  const auto rows = j.at("equality").get<std::vector<std::vector<double>>>();
  p.equality_ = Eigen::MatrixXd(rows.size(), p.num_states_ * p.num_actions_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    p.equality_.row(r) = ToEigen(rows[r]).transpose();
  }
  p.rhs_ = ToEigen(j.at("rhs").get<std::vector<double>>());
  p.max_floor_ = j.at("max_floor").get<double>();
  p.max_floor_point_ = ToEigen(j.at("max_floor_point").get<std::vector<double>>());
  return p;
}

}  // namespace occgame
