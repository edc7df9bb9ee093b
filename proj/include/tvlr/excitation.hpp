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

#ifndef TVLR_EXCITATION_HPP
#define TVLR_EXCITATION_HPP

// Information-matrix filter and excitation analysis of sampled regressors.

#include <functional>
#include <optional>
#include <vector>

#include "tvlr/numerics.hpp"

namespace tvlr {

/// Filtered normalized regressor outer product,
///   Omega' = -lambda Omega + lambda phi phi^T / (1 + phi^T phi).
struct InfoMatrixState {
  SymMat<double> omega;
  double lambda_omega = 0;
  double t = 0;
};

/// Packed derivative of Omega for a given regressor sample.
VecXd omega_rhs(const VecXd& omega_packed, const VecXd& phi, double lambda_omega);

/// One RK4 step with phi held constant across the step.
InfoMatrixState omega_step(const InfoMatrixState& state, const VecXd& phi, double dt);

/// Uniformly sampled regressor signal: row k of `phi` is the sample at t[k].
struct RegressorTrace {
  std::vector<double> t;
  MatXd phi;

  RegressorTrace() = default;
  RegressorTrace(std::vector<double> times, MatXd samples);

  Eigen::Index dim() const { return phi.cols(); }
  std::size_t size() const { return t.size(); }
  double spacing() const;
};

RegressorTrace sample_regressor(const std::function<VecXd(double)>& phi, double t_begin,
                                double t_end, std::size_t intervals);

/// Gram integral of phi phi^T over [t1, t2] by composite Simpson over the
/// samples (3/8 rule on the last three intervals when the count is odd).
/// Window ends are snapped to the nearest sample.
SymMat<double> gram_integral(const RegressorTrace& trace, double t1, double t2);

struct ExcitationConfig {
  double kappa = 0.5;
  double gamma_max = 100.0;
  double k_omega = 2.0;
  double rho_omega = 0.5;
  double lambda_omega = 10.0;

  /// Throws PreconditionError unless kappa > 1/gamma_max, k_omega > 1,
  /// rho_omega in (0, 1) and lambda_omega > 0.
  void validate() const;
};

/// Minimum excitation level k d / (kappa Gamma_max rho lambda exp(-lambda T)).
double excitation_threshold(const ExcitationConfig& config, double d, double window_length);

/// Time for a quantity decaying at `rate` to shrink by the factor `ratio`
/// in (0, 1]: -ln(ratio) / rate.
double decay_time(double ratio, double rate);

enum class ExcitationKind { kNone, kFinite, kPersistent };

const char* to_string(ExcitationKind kind);

struct ExcitationReport {
  ExcitationKind kind = ExcitationKind::kNone;
  double t1 = 0;
  double t2 = 0;
  double alpha = 0;   // min eig of the windowed Gram integral
  double T = 0;       // window length
  double d = 0;       // sampled max of 1 + |phi|^2
  double alpha0 = 0;  // required level
  bool meets_assumption3 = false;
};

/// Finite excitation on [t1, t2] (window length T = t2 - t1).
ExcitationReport detect_fe(const RegressorTrace& trace, double t1, double t2,
                           const ExcitationConfig& config);

/// Persistent excitation over the recorded trace: alpha is the minimum over
/// window starts spaced by `stride`. A finite record can only report on the
/// windows it contains. When `config` is given, alpha0 holds the persistent
/// threshold k d' / (kappa Gamma_max rho lambda exp(-lambda T)) with d' the
/// max of 1 + |phi|^2 over the whole trace.
ExcitationReport detect_pe(const RegressorTrace& trace, double T, double stride,
                           const std::optional<ExcitationConfig>& config = std::nullopt);

struct GammaPhaseInput {
  double rho_gamma = 0.9;
  double lambda_gamma = 0.5;
  double gamma_t3 = 0;  // |Gamma(t3)|, measured
};

struct PropagationTimeline {
  double omega_fe = 0;  // k_omega / (kappa Gamma_max)
  double t3 = 0;        // t2 - ln(rho_omega) / lambda_omega
  bool has_gamma_phase = false;
  double gamma_fe = 0;  // Gamma(t3) / rho_gamma
  double t4 = 0;        // t3 - ln(rho_gamma) / lambda_gamma
};

/// Phase constants following a finite excitation. Throws PreconditionError
/// when the report does not meet the required excitation level, or when
/// rho_gamma is outside (Gamma(t3)/Gamma_max, 1).
PropagationTimeline propagation_timeline(const ExcitationReport& report,
                                         const ExcitationConfig& config,
                                         const std::optional<GammaPhaseInput>& gamma = std::nullopt);

}  // namespace tvlr

#endif  // TVLR_EXCITATION_HPP
