// Copyright 2026 The tvlr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tvlr/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

#include "tvlr/analysis.hpp"
#include "tvlr/errors.hpp"

namespace tvlr {

void SimConfig::validate() const {
  if (!(dt > 0)) throw ConfigError("sim.dt must be positive");
  if (integrator == Integrator::kRk4 && dt > kMaxStep) {
    throw ConfigError("sim.dt must not exceed " + format_number(kMaxStep) + " s for rk4");
  }
  if (!(t_end > 0)) throw ConfigError("sim.t_end must be positive");
  if (record_stride == 0) throw ConfigError("sim.record_stride must be at least 1");
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::llround(t_end / dt));
}

const char* to_string(Integrator method) {
  return method == Integrator::kEuler ? "euler" : "rk4";
}

Integrator parse_integrator(const std::string& name) {
  if (name == "rk4") return Integrator::kRk4;
  if (name == "euler") return Integrator::kEuler;
  throw ConfigError("unknown integrator '" + name + "' (expected rk4 or euler)");
}

RegressorTrace Trajectory::regressor_trace() const {
  std::vector<double> t;
  MatXd phi(static_cast<Eigen::Index>(samples.size()), N);
  t.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    t.push_back(samples[k].t);
    phi.row(static_cast<Eigen::Index>(k)) = samples[k].phi.transpose();
  }
  return RegressorTrace(std::move(t), std::move(phi));
}

namespace {

constexpr int kMaxSwitchesPerStep = 8;
constexpr double kSwitchResolution = 1e-13;

// Flat state layout: [x (n), xhat (n), theta, Gamma, Omega].
struct Layout {
  Eigen::Index n;
  Eigen::Index law;
  Eigen::Index size() const { return 2 * n + law; }
};

TrajectorySample make_sample(const ErrorModelScenario& s, const EstimatorLaw& law,
                             const VecXd& x, const VecXd& xhat, double t) {
  const ClosedLoopEval cl = closed_loop_rhs(s, x, xhat, law.params.theta, t);
  TrajectorySample r;
  r.t = t;
  r.x = x;
  r.xhat = xhat;
  r.e = cl.e;
  r.u = cl.u;
  r.phi = cl.phi;
  r.theta = law.params.theta;
  r.theta_star = s.uncertainty.theta_star(t);
  r.theta_star_dot = s.uncertainty.theta_star_dot(t);
  r.gamma = law.rate.gamma;
  r.omega = law.info.omega;
  r.rho = law_rhs(law, cl.Y, cl.phi).rho;
  const MatXd tilde = r.theta_tilde();
  r.V = lyapunov_V(r.e, tilde, s.cert.P, r.gamma);
  r.norm_e = r.e.norm();
  r.norm_theta_tilde = tilde.norm();
  return r;
}

}  // namespace

Trajectory run(const ErrorModelScenario& scenario, const EstimatorLaw& law0,
               const SimConfig& config) {
  config.validate();
  const Eigen::Index n = scenario.state_dim();
  if (law0.regressor_dim() != scenario.regressor_dim() ||
      law0.param_cols() != scenario.param_cols()) {
    throw PreconditionError("run: estimator shape does not match the scenario");
  }
  const Layout layout{n, law0.packed_size()};

  EstimatorLaw law = law0;
  law.info.t = 0.0;
  check_invariants(law, 0.0);

  VecXd state(layout.size());
  state.head(n) = scenario.x0;
  state.segment(n, n) = scenario.xhat0;
  state.tail(layout.law) = pack_state(law);

  Trajectory traj;
  traj.variant = law.variant;
  traj.n = n;
  traj.N = law.regressor_dim();
  traj.m = law.param_cols();
  const std::size_t steps = config.steps();
  traj.samples.reserve(steps / config.record_stride + 1);
  traj.samples.push_back(make_sample(scenario, law, scenario.x0, scenario.xhat0, 0.0));

  EstimatorLaw work = law;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    const double t_step_end = static_cast<double>(k + 1) * config.dt;
    auto closed_loop = [&](double tau, const VecXd& s) {
      unpack_state(work, s.tail(layout.law));
      const double z = scenario.command.within_step(t, tau);
      return closed_loop_rhs(scenario, s.head(n), s.segment(n, n), work.params.theta, tau, z);
    };
    auto branches_at = [&](double tau, const VecXd& s) {
      return active_branches(work, closed_loop(tau, s).Y);
    };
    ProjectionBranches held;
    auto rhs = [&](double tau, const VecXd& s) {
      const ClosedLoopEval cl = closed_loop(tau, s);
      VecXd d(layout.size());
      d.head(n) = cl.dx;
      d.segment(n, n) = cl.dxhat;
      d.tail(layout.law) = law_rhs(work, cl.Y, cl.phi, &held).packed;
      return d;
    };

    // Each sub-step keeps the projection branches of its start point, so the
    // stages see a smooth field. A switch inside the step is located by
    // bisection and the step is split there.
    // The reference model takes the plain grid step so that xhat never
    // depends on where the estimator switched.
    auto reference = [&](double tau, const VecXd& xh) {
      return reference_rhs(scenario, xh, scenario.command.within_step(t, tau));
    };
    const VecXd xhat_next =
        integrate_step(reference, t, VecXd(state.segment(n, n)), config.dt, config.integrator);

    double t_sub = t;
    int events = 0;
    while (true) {
      const double h = t_step_end - t_sub;
      if (events >= kMaxSwitchesPerStep) {
        // Chattering across a switch: let every stage pick its own branch.
        held = ProjectionBranches{};
        state = integrate_step(rhs, t_sub, state, h, config.integrator);
        break;
      }
      held = branches_at(t_sub, state);
      const ProjectionBranches start = held;
      VecXd trial = integrate_step(rhs, t_sub, state, h, config.integrator);
      if (branches_at(t_step_end, trial) == start) {
        state = std::move(trial);
        break;
      }
      double lo = 0.0;
      double hi = h;
      VecXd at_hi = std::move(trial);
      while (hi - lo > kSwitchResolution) {
        const double mid = 0.5 * (lo + hi);
        held = start;
        VecXd probe = integrate_step(rhs, t_sub, state, mid, config.integrator);
        if (branches_at(t_sub + mid, probe) == start) {
          lo = mid;
        } else {
          hi = mid;
          at_hi = std::move(probe);
        }
      }
      state = std::move(at_hi);
      t_sub += hi;
      ++events;
      ++traj.branch_switches;
      if (t_step_end - t_sub <= kSwitchResolution) break;
    }
    state.segment(n, n) = xhat_next;

    const double t_next = static_cast<double>(k + 1) * config.dt;
    unpack_state(law, state.tail(layout.law));
    law.info.t = t_next;
    if (!all_finite(state.head(2 * n))) {
      throw IntegrationError(t_next, "x", "non-finite plant or reference state");
    }
    check_invariants(law, t_next);
    if ((k + 1) % config.record_stride == 0) {
      traj.samples.push_back(
          make_sample(scenario, law, state.head(n), state.segment(n, n), t_next));
    }
  }
  return traj;
}

std::string format_number(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::vector<std::string> trajectory_columns(const Trajectory& traj) {
  std::vector<std::string> cols{"t"};
  auto indexed = [&](const char* prefix, Eigen::Index count) {
    for (Eigen::Index i = 1; i <= count; ++i) cols.push_back(prefix + std::to_string(i));
  };
  indexed("x", traj.n);
  indexed("xhat", traj.n);
  indexed("e", traj.n);
  if (traj.m == 1) {
    cols.emplace_back("u");
  } else {
    indexed("u", traj.m);
  }
  for (Eigen::Index j = 1; j <= traj.m; ++j)
    for (Eigen::Index i = 1; i <= traj.N; ++i)
      cols.push_back("theta_" + std::to_string(i) + "_" + std::to_string(j));
  for (const char* name : {"gamma_", "omega_"})
    for (Eigen::Index i = 1; i <= traj.N; ++i)
      for (Eigen::Index j = i; j <= traj.N; ++j)
        cols.push_back(name + std::to_string(i) + "_" + std::to_string(j));
  for (const char* name : {"rho", "V", "norm_e", "norm_theta_tilde"}) cols.emplace_back(name);
  return cols;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto cols = trajectory_columns(traj);
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  for (const auto& s : traj.samples) {
    std::string line = format_number(s.t);
    auto put = [&](double v) {
      line += ',';
      line += format_number(v);
    };
    for (Eigen::Index i = 0; i < s.x.size(); ++i) put(s.x(i));
    for (Eigen::Index i = 0; i < s.xhat.size(); ++i) put(s.xhat(i));
    for (Eigen::Index i = 0; i < s.e.size(); ++i) put(s.e(i));
    for (Eigen::Index i = 0; i < s.u.size(); ++i) put(s.u(i));
    for (Eigen::Index k = 0; k < s.theta.size(); ++k) put(s.theta.data()[k]);
    for (Eigen::Index k = 0; k < s.gamma.packed().size(); ++k) put(s.gamma.packed()(k));
    for (Eigen::Index k = 0; k < s.omega.packed().size(); ++k) put(s.omega.packed()(k));
    put(s.rho);
    put(s.V);
    put(s.norm_e);
    put(s.norm_theta_tilde);
    os << line << '\n';
  }
}

}  // namespace tvlr
