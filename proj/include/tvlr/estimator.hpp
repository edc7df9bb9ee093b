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

#ifndef TVLR_ESTIMATOR_HPP
#define TVLR_ESTIMATOR_HPP

// Adaptive laws for the parameter estimate theta (N x m):
//
//   static        theta' = Gamma0 Y
//   tv_projected  theta' = Proj_Gamma(theta, Y, F)
//                 Gamma' = lambda_Gamma Proj(Gamma, Gamma - kappa Gamma Omega Gamma, F_Gamma)
//                 Omega' = -lambda_Omega Omega + lambda_Omega phi phi^T / (1 + phi^T phi)
//   tv_forgetting as tv_projected, but
//                 Gamma' = lambda_Gamma (1 - |Gamma|_2 / Gamma_max)(Gamma - kappa Gamma Omega Gamma)

#include <string>
#include <vector>

#include "tvlr/excitation.hpp"
#include "tvlr/numerics.hpp"
#include "tvlr/projection.hpp"

namespace tvlr {

enum class LawVariant { kStatic, kTvProjected, kTvForgetting };

const char* to_string(LawVariant v);
LawVariant parse_law_variant(const std::string& name);

namespace tol {
inline constexpr double kThetaSet = 1e-6;    // f_j(theta_j) <= 1 + tol
inline constexpr double kGammaEig = 1e-6;    // Gamma_min - tol <= eig(Gamma) <= Gamma_max + tol
inline constexpr double kOmegaEig = 1e-9;    // -tol <= eig(Omega) <= 1 + tol
}  // namespace tol

struct ParamMatrix {
  MatXd theta;
  ProjFamily<double> family;

  /// Largest f_j(theta_j) over the columns.
  double max_level() const;
  /// Frobenius bound implied by the family: sqrt(sum_j (cap_j + eps_j)^2).
  double norm_bound() const;
};

struct LearningRateState {
  SymMat<double> gamma;
  ConvexBound<double> bound{90.0, 10.0, NormKind::kFrobenius};
  double lambda_gamma = 0.5;
  double kappa = 0.5;
  double rho_last = 1.0;

  /// Gamma_max, where F_Gamma reaches one.
  double gamma_max() const { return bound.outer_radius(); }
};

struct EstimatorLaw {
  LawVariant variant = LawVariant::kTvProjected;
  ParamMatrix params;
  LearningRateState rate;  // for kStatic, rate.gamma holds the constant Gamma0
  InfoMatrixState info;
  SymMat<double> gamma0;   // Gamma(t0)
  double gamma_min = 0;    // 1 / (max eig(Gamma0^-1) + kappa), or min eig(Gamma0) for kStatic

  Eigen::Index regressor_dim() const { return params.theta.rows(); }
  Eigen::Index param_cols() const { return params.theta.cols(); }
  /// Length of the packed [theta, Gamma, Omega] state.
  Eigen::Index packed_size() const;
};

struct LawGains {
  double lambda_gamma = 0.5;
  double kappa = 0.5;
  double lambda_omega = 10.0;
  ConvexBound<double> gamma_bound{90.0, 10.0, NormKind::kFrobenius};
};

/// Builds a law with theta(t0) = theta0, Gamma(t0) = Gamma0 and Omega(t0) = omega0
/// (zero when omitted). Throws PreconditionError when theta0 is outside Xi_1,
/// Gamma0 is not positive definite or outside {F_Gamma <= 1}, or
/// kappa <= 1/Gamma_max.
EstimatorLaw make_law(LawVariant variant, ParamMatrix theta0, const SymMat<double>& gamma0,
                      const LawGains& gains, const SymMat<double>& omega0 = SymMat<double>());

/// Which projection branch each switch takes: one entry per theta column and
/// one for Gamma. An empty `theta` means every column decides for itself.
struct ProjectionBranches {
  std::vector<Branch> theta;
  Branch gamma = Branch::kNatural;

  bool operator==(const ProjectionBranches&) const = default;
};

/// The branches the projections would take at the current state. Static and
/// forgetting laws have no Gamma switch and report it as kInactive.
ProjectionBranches active_branches(const EstimatorLaw& law, const MatXd& Y);

/// theta' for the current Gamma.
MatXd theta_rhs(const EstimatorLaw& law, const MatXd& Y, const std::vector<Branch>& branches = {});

struct GammaRate {
  MatXd d_gamma;
  double rho;
};

/// Projected learning-rate derivative lambda rho (Gamma - kappa Gamma Omega Gamma).
GammaRate gamma_rhs(const LearningRateState& state, const SymMat<double>& omega,
                    Branch branch = Branch::kNatural);

/// 1 - |Gamma|_2 / Gamma_max.
double forgetting_factor(const LearningRateState& state);

MatXd gamma_rhs_forgetting(const LearningRateState& state, const SymMat<double>& omega);

struct LawDerivative {
  VecXd packed;  // d/dt of [theta (column-major), Gamma (upper), Omega (upper)]
  double rho;    // projection scalar; the forgetting factor for kTvForgetting, 1 for kStatic
};

/// With `branches` given, the projections are held on those branches instead of
/// deciding from the state.
LawDerivative law_rhs(const EstimatorLaw& law, const MatXd& Y, const VecXd& phi,
                      const ProjectionBranches* branches = nullptr);

VecXd pack_state(const EstimatorLaw& law);
void unpack_state(EstimatorLaw& law, const Eigen::Ref<const VecXd>& packed);

/// Throws IntegrationError naming the quantity when theta leaves Xi_1, an
/// eigenvalue of Gamma leaves [Gamma_min, Gamma_max] or one of Omega leaves
/// [0, 1], beyond the tolerances above.
void check_invariants(const EstimatorLaw& law, double t);

/// Advances theta, Gamma and Omega together by one RK4 step with Y and phi
/// held over the step. Records rho_last at the new state.
EstimatorLaw estimator_step(const EstimatorLaw& law, const MatXd& Y, const VecXd& phi, double dt);

}  // namespace tvlr

#endif  // TVLR_ESTIMATOR_HPP
