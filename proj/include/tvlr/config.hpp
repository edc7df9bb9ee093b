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

#ifndef TVLR_CONFIG_HPP
#define TVLR_CONFIG_HPP

// Run configuration: a JSON document with nested sections. Matrices are
// nested arrays, row-major. Unknown keys are rejected.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tvlr/error_models.hpp"
#include "tvlr/estimator.hpp"
#include "tvlr/excitation.hpp"
#include "tvlr/simulate.hpp"

namespace tvlr {

struct CustomPlant {
  MatXd A;
  MatXd B;
  MatXd Bz;
  MatXd K;
  MatXd Q;   // identity when empty
  VecXd x0;  // zero when empty
};

struct ScenarioConfig {
  std::string builtin = "f16-paper";   // empty when `custom` is used
  std::optional<CustomPlant> custom;
};

// Defaults marked "chosen" are not taken from the flight-control example and
// can be overridden freely.
struct GainConfig {
  double lambda_gamma = 0.5;
  double kappa = 0.5;
  double lambda_omega = 10.0;
  double gamma0_scale = 10.0;   // Gamma0 = scale * I unless gamma0 is given
  MatXd gamma0;
  double theta_cap = 1.0;       // chosen
  double theta_margin = 0.1;    // chosen
  double gamma_max = 100.0;     // chosen; F_Gamma = 1 on |Gamma|_F = gamma_max
  double gamma_margin = 10.0;   // chosen; F_Gamma = 0 on |Gamma|_F = gamma_max - margin
  double k_omega = 2.0;         // chosen
  double rho_omega = 0.5;       // chosen
  double rho_gamma = 0.9;       // chosen
};

struct AnalysisConfig {
  std::optional<std::pair<double, double>> envelope_window;  // [t3, t4]
  std::optional<std::pair<double, double>> fe_window;        // [t1, t2]
};

struct OutputConfig {
  std::string trajectory = "trajectory.csv";
  std::string bounds = "bounds.csv";
  std::string compare = "compare.csv";
};

struct RunConfig {
  ScenarioConfig scenario;
  UncertaintySpec uncertainty = UncertaintySpec::constant_paper();
  CommandSpec command = CommandSpec::step_train(10.0, 5.0);
  std::vector<LawVariant> laws{LawVariant::kTvProjected};
  GainConfig gains;
  SimConfig sim;
  AnalysisConfig analysis;
  OutputConfig output;
};

/// Built-in configurations: "f16-paper".
RunConfig builtin_config(const std::string& name);

/// Parses and validates a JSON document. Errors carry the line and column of
/// a syntax error, or the dotted key path of a semantic one.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::string serialize_config(const RunConfig& config);

ErrorModelScenario build_scenario(const RunConfig& config);
EstimatorLaw build_law(const RunConfig& config, LawVariant variant, Eigen::Index regressor_dim,
                       Eigen::Index param_cols);
ExcitationConfig excitation_config(const RunConfig& config);

}  // namespace tvlr

#endif  // TVLR_CONFIG_HPP
