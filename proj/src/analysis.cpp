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

#include "tvlr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "tvlr/errors.hpp"

namespace tvlr {

namespace {

constexpr double kTimeSnap = 1e-9;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double clamp_rho(double rho) { return std::clamp(rho, 0.0, 1.0); }

MatXd gamma_inverse_times(const SymMat<double>& gamma, const MatXd& rhs) {
  const Eigen::LLT<MatXd> llt(gamma.dense());
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Gamma is not positive definite");
  }
  return llt.solve(rhs);
}

}  // namespace

AnalysisGains analysis_gains(const ErrorModelScenario& scenario, const EstimatorLaw& law) {
  AnalysisGains g;
  g.kappa = law.rate.kappa;
  g.theta_tilde_max = law.params.norm_bound() + scenario.uncertainty.theta_star_max();
  g.theta_star_d_max = scenario.uncertainty.theta_star_d_max();
  if (law.variant == LawVariant::kStatic) {
    const auto values = sym_eig(law.gamma0).values;
    g.lambda_gamma = 0.0;
    g.gamma_min = values(0);
    g.gamma_max = values(values.size() - 1);
  } else {
    g.lambda_gamma = law.rate.lambda_gamma;
    g.gamma_min = law.gamma_min;
    g.gamma_max = law.rate.gamma_max();
  }
  return g;
}

double lyapunov_V(const VecXd& e, const MatXd& theta_tilde, const SymMat<double>& P,
                  const SymMat<double>& gamma) {
  const double tracking = e.dot(P.dense() * e);
  const double parameter = theta_tilde.cwiseProduct(gamma_inverse_times(gamma, theta_tilde)).sum();
  return tracking + parameter;
}

double upsilon(double rho, const SymMat<double>& omega, const MatXd& theta_tilde,
               const MatXd& theta_star_dot, const AnalysisGains& gains) {
  const double tilde = theta_tilde.norm();
  double out = 0.0;
  if (gains.lambda_gamma != 0.0 && tilde != 0.0) {
    out += gains.lambda_gamma * clamp_rho(rho) * gains.kappa * spectral_norm(omega) * tilde * tilde;
  }
  out += 2.0 / gains.gamma_min * tilde * theta_star_dot.norm();
  return out;
}

double upsilon_max(const AnalysisGains& gains) {
  double out = 0.0;
  if (gains.lambda_gamma != 0.0) {
    out += gains.lambda_gamma * gains.kappa * gains.theta_tilde_max * gains.theta_tilde_max;
  }
  if (gains.theta_star_d_max != 0.0) {
    out += 2.0 / gains.gamma_min * gains.theta_tilde_max * gains.theta_star_d_max;
  }
  return out;
}

double eta(double rho, const LyapunovCert<double>& cert, const AnalysisGains& gains) {
  const double num = std::min(cert.q0, gains.lambda_gamma * clamp_rho(rho) / gains.gamma_max);
  const double den = std::max(cert.p_max, 1.0 / gains.gamma_min);
  return num / den;
}

bool in_residual_set(const VecXd& e, const MatXd& theta_tilde, double eta_val,
                     double upsilon_val, const LyapunovCert<double>& cert,
                     const AnalysisGains& gains) {
  const double weighted = cert.p_min * e.squaredNorm() + theta_tilde.squaredNorm() / gains.gamma_max;
  return eta_val * weighted <= upsilon_val;
}

SetMembership set_membership(const VecXd& e, const MatXd& theta_tilde, const SetLevels& levels,
                             const LyapunovCert<double>& cert, const AnalysisGains& gains) {
  return {in_residual_set(e, theta_tilde, levels.eta, levels.upsilon, cert, gains),
          in_residual_set(e, theta_tilde, levels.eta0, levels.upsilon_max, cert, gains)};
}

double envelope_value(double t, double t3, double V_t3, double eta0, double upsilon_max_val) {
  const double dt = t - t3;
  // e^{-eta0 dt} V3 + upsilon_max (1 - e^{-eta0 dt}) / eta0, written to stay
  // accurate as eta0 -> 0.
  if (eta0 > 0.0) {
    const double gain = -std::expm1(-eta0 * dt) / eta0;
    return std::exp(-eta0 * dt) * V_t3 + upsilon_max_val * gain;
  }
  return V_t3 + upsilon_max_val * dt;
}

VdotTerms vdot_decomposition(const TrajectorySample& s, const LyapunovCert<double>& cert,
                             const AnalysisGains& gains) {
  VdotTerms out;
  out.term_Q = -s.e.dot(cert.Q.dense() * s.e);
  const MatXd tilde = s.theta_tilde();
  out.term_thetadot =
      -2.0 * tilde.cwiseProduct(gamma_inverse_times(s.gamma, s.theta_star_dot)).sum();
  if (gains.lambda_gamma != 0.0) {
    const MatXd inner =
        gamma_inverse_times(s.gamma, tilde) - gains.kappa * s.omega.dense() * tilde;
    out.term_excitation = -gains.lambda_gamma * s.rho * tilde.cwiseProduct(inner).sum();
  }
  return out;
}

double min_rho(const Trajectory& traj, double t3, double t4) {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.samples) {
    if (s.t >= t3 - kTimeSnap && s.t <= t4 + kTimeSnap) out = std::min(out, s.rho);
  }
  return out;
}

std::vector<BoundReport> envelope_check(const Trajectory& traj, const LyapunovCert<double>& cert,
                                        const AnalysisGains& gains, double t3, double t4,
                                        std::optional<double> eta0_val,
                                        std::optional<double> upsilon_max_val, double slack) {
  if (traj.samples.empty()) throw RangeError("envelope_check: empty trajectory");
  const double first = traj.samples.front().t;
  const double last = traj.samples.back().t;
  if (!(t4 >= t3) || t3 < first - kTimeSnap || t4 > last + kTimeSnap) {
    throw RangeError("envelope_check: [t3, t4] must lie inside the trajectory");
  }
  const double e0 = eta0_val ? *eta0_val : eta(min_rho(traj, t3, t4), cert, gains);
  const double umax = upsilon_max_val ? *upsilon_max_val : upsilon_max(gains);

  std::vector<BoundReport> out;
  out.reserve(traj.samples.size());
  bool started = false;
  double v3 = 0.0;
  double start_t = 0.0;
  double decay = 0.0;      // int_{t3}^{t} eta
  double forced = 0.0;     // int_{t3}^{t} Phi(t, tau) upsilon(tau)
  double prev_t = 0.0;
  double prev_eta = 0.0;
  double prev_upsilon = 0.0;
  for (const auto& s : traj.samples) {
    BoundReport r;
    r.t = s.t;
    r.eta_t = eta(s.rho, cert, gains);
    r.upsilon_t = upsilon(s.rho, s.omega, s.theta_tilde(), s.theta_star_dot, gains);
    r.eta0 = e0;
    r.upsilon_max = umax;
    const auto member = set_membership(s.e, s.theta_tilde(),
                                       {r.eta_t, r.upsilon_t, e0, umax}, cert, gains);
    r.in_D = member.in_D;
    r.in_Dmax = member.in_Dmax;
    r.vdot = vdot_decomposition(s, cert, gains);
    r.in_window = s.t >= t3 - kTimeSnap && s.t <= t4 + kTimeSnap;
    r.envelope_value = kNaN;
    r.transition_bound = kNaN;
    if (r.in_window) {
      if (!started) {
        started = true;
        v3 = s.V;
        start_t = s.t;
      } else {
        const double h = s.t - prev_t;
        const double step_decay = 0.5 * h * (prev_eta + r.eta_t);
        decay += step_decay;
        forced = std::exp(-step_decay) * (forced + 0.5 * h * prev_upsilon) + 0.5 * h * r.upsilon_t;
      }
      r.envelope_value = envelope_value(s.t, start_t, v3, e0, umax);
      r.transition_bound = std::exp(-decay) * v3 + forced;
      r.envelope_ok = s.V <= r.envelope_value + slack * (1.0 + v3);
      prev_t = s.t;
      prev_eta = r.eta_t;
      prev_upsilon = r.upsilon_t;
    }
    out.push_back(r);
  }
  return out;
}

void write_bound_csv(std::ostream& os, const std::vector<BoundReport>& reports) {
  os << "t,eta,upsilon,eta0,upsilon_max,in_D,in_Dmax,envelope,envelope_ok,"
        "vdot_term_Q,vdot_term_thetadot,vdot_term_excitation\n";
  for (const auto& r : reports) {
    os << format_number(r.t) << ',' << format_number(r.eta_t) << ','
       << format_number(r.upsilon_t) << ',' << format_number(r.eta0) << ','
       << format_number(r.upsilon_max) << ',' << (r.in_D ? 1 : 0) << ','
       << (r.in_Dmax ? 1 : 0) << ',' << format_number(r.envelope_value) << ','
       << (r.envelope_ok ? 1 : 0) << ',' << format_number(r.vdot.term_Q) << ','
       << format_number(r.vdot.term_thetadot) << ',' << format_number(r.vdot.term_excitation)
       << '\n';
  }
}

std::vector<double> finite_difference_vdot(const Trajectory& traj) {
  const auto& s = traj.samples;
  std::vector<double> out(s.size(), 0.0);
  if (s.size() < 2) return out;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == s.size() ? k : k + 1;
    out[k] = (s[hi].V - s[lo].V) / (s[hi].t - s[lo].t);
  }
  return out;
}

}  // namespace tvlr
