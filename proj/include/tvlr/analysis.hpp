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

#ifndef TVLR_ANALYSIS_HPP
#define TVLR_ANALYSIS_HPP

// Lyapunov diagnostics over recorded trajectories.
//
//   V        = e^T P e + Tr[theta~^T Gamma^-1 theta~]
//   upsilon  = lambda rho kappa |Omega| |theta~|^2 + 2 Gamma_min^-1 |theta~| |theta*'|
//   eta      = min{q0, lambda rho / Gamma_max} / max{p_max, 1 / Gamma_min}
//   D        = {(e, theta~) : eta (p_min |e|^2 + |theta~|^2 / Gamma_max) <= upsilon}
//   envelope = exp(-eta0 (t - t3)) (V(t3) - upsilon_max / eta0) + upsilon_max / eta0
//
// |Omega| is the spectral norm; |theta~| and |theta*'| are Frobenius norms.

#include <iosfwd>
#include <optional>
#include <vector>

#include "tvlr/error_models.hpp"
#include "tvlr/estimator.hpp"
#include "tvlr/simulate.hpp"

namespace tvlr {

struct AnalysisGains {
  double lambda_gamma = 0;
  double kappa = 0;
  double gamma_max = 0;
  double gamma_min = 0;
  double theta_tilde_max = 0;  // theta_max + theta*_max
  double theta_star_d_max = 0;
};

/// Gains for a law running on a scenario. theta_max is the Frobenius bound of
/// the projection family. The static law has lambda_Gamma = 0 and Gamma_min,
/// Gamma_max equal to the extreme eigenvalues of Gamma0.
AnalysisGains analysis_gains(const ErrorModelScenario& scenario, const EstimatorLaw& law);

/// Throws NumericalError when Gamma is not positive definite.
double lyapunov_V(const VecXd& e, const MatXd& theta_tilde, const SymMat<double>& P,
                  const SymMat<double>& gamma);

double upsilon(double rho, const SymMat<double>& omega, const MatXd& theta_tilde,
               const MatXd& theta_star_dot, const AnalysisGains& gains);
double upsilon_max(const AnalysisGains& gains);

double eta(double rho, const LyapunovCert<double>& cert, const AnalysisGains& gains);

struct SetMembership {
  bool in_D = false;
  bool in_Dmax = false;
};

struct SetLevels {
  double eta = 0;
  double upsilon = 0;
  double eta0 = 0;
  double upsilon_max = 0;
};

/// eta (p_min |e|^2 + |theta~|^2 / Gamma_max) <= upsilon.
bool in_residual_set(const VecXd& e, const MatXd& theta_tilde, double eta_val,
                     double upsilon_val, const LyapunovCert<double>& cert,
                     const AnalysisGains& gains);

SetMembership set_membership(const VecXd& e, const MatXd& theta_tilde, const SetLevels& levels,
                             const LyapunovCert<double>& cert, const AnalysisGains& gains);

double envelope_value(double t, double t3, double V_t3, double eta0, double upsilon_max);

struct VdotTerms {
  double term_Q = 0;           // -e^T Q e
  double term_thetadot = 0;    // -2 Tr[theta~^T Gamma^-1 theta*']
  double term_excitation = 0;  // -lambda rho Tr[theta~^T (Gamma^-1 - kappa Omega) theta~]
  double sum() const { return term_Q + term_thetadot + term_excitation; }
};

VdotTerms vdot_decomposition(const TrajectorySample& sample, const LyapunovCert<double>& cert,
                             const AnalysisGains& gains);

struct BoundReport {
  double t = 0;
  double eta_t = 0;
  double upsilon_t = 0;
  double eta0 = 0;
  double upsilon_max = 0;
  bool in_D = false;
  bool in_Dmax = false;
  bool in_window = false;
  double envelope_value = 0;    // NaN outside [t3, t4]
  double transition_bound = 0;  // Phi(t,t3) V(t3) + int Phi(t,tau) upsilon(tau), NaN outside
  bool envelope_ok = true;
  VdotTerms vdot;
};

/// min rho over the samples in [t3, t4].
double min_rho(const Trajectory& traj, double t3, double t4);

/// Per-sample bound report. Inside [t3, t4] the envelope is started from the
/// sample at t3 and envelope_ok requires V(t) <= envelope(t) + slack (1 + V(t3)).
/// eta0 defaults to eta at the minimum recorded rho over the window.
/// Throws RangeError when [t3, t4] is not inside the trajectory.
std::vector<BoundReport> envelope_check(const Trajectory& traj, const LyapunovCert<double>& cert,
                                        const AnalysisGains& gains, double t3, double t4,
                                        std::optional<double> eta0 = std::nullopt,
                                        std::optional<double> upsilon_max_val = std::nullopt,
                                        double slack = 1e-6);

void write_bound_csv(std::ostream& os, const std::vector<BoundReport>& reports);

/// Central finite differences of the recorded V; endpoints use one-sided differences.
std::vector<double> finite_difference_vdot(const Trajectory& traj);

}  // namespace tvlr

#endif  // TVLR_ANALYSIS_HPP
