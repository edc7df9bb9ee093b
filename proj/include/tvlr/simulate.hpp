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

#ifndef TVLR_SIMULATE_HPP
#define TVLR_SIMULATE_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvlr/error_models.hpp"
#include "tvlr/estimator.hpp"
#include "tvlr/integrator.hpp"

namespace tvlr {

struct SimConfig {
  double dt = 1e-3;
  double t_end = 60.0;
  std::size_t record_stride = 10;
  Integrator integrator = Integrator::kRk4;

  /// Largest RK4 step accepted at the F-16 time scales.
  static constexpr double kMaxStep = 0.01;

  void validate() const;
  std::size_t steps() const;
};

const char* to_string(Integrator method);
Integrator parse_integrator(const std::string& name);

struct TrajectorySample {
  double t = 0;
  VecXd x;
  VecXd xhat;
  VecXd e;
  VecXd u;
  VecXd phi;
  MatXd theta;
  MatXd theta_star;
  MatXd theta_star_dot;
  SymMat<double> gamma;
  SymMat<double> omega;
  double rho = 1;
  double V = 0;
  double norm_e = 0;
  double norm_theta_tilde = 0;

  MatXd theta_tilde() const { return theta - theta_star; }
};

struct Trajectory {
  LawVariant variant = LawVariant::kTvProjected;
  Eigen::Index n = 0;  // plant states
  Eigen::Index N = 0;  // regressor length
  Eigen::Index m = 0;  // parameter columns
  std::vector<TrajectorySample> samples;
  std::size_t branch_switches = 0;  // projection switches located inside steps

  RegressorTrace regressor_trace() const;
};

/// Integrates plant, reference model, theta, Gamma and Omega on shared RK4
/// stages from t = 0 to t_end, recording every `record_stride` steps. A
/// projection switch inside a step is located and the step split there.
/// Throws IntegrationError on an invariant breach.
Trajectory run(const ErrorModelScenario& scenario, const EstimatorLaw& law,
               const SimConfig& config);

std::vector<std::string> trajectory_columns(const Trajectory& traj);
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Shortest round-trip decimal rendering.
std::string format_number(double v);

}  // namespace tvlr

#endif  // TVLR_SIMULATE_HPP
