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

#include "tvlr/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "tvlr/errors.hpp"
#include "tvlr/integrator.hpp"

namespace tvlr {

const char* to_string(LawVariant v) {
  switch (v) {
    case LawVariant::kStatic: return "static";
    case LawVariant::kTvProjected: return "tv_projected";
    case LawVariant::kTvForgetting: return "tv_forgetting";
  }
  return "?";
}

LawVariant parse_law_variant(const std::string& name) {
  if (name == "static") return LawVariant::kStatic;
  if (name == "tv_projected" || name == "tv") return LawVariant::kTvProjected;
  if (name == "tv_forgetting" || name == "forgetting") return LawVariant::kTvForgetting;
  throw ConfigError("unknown law '" + name + "' (expected static, tv_projected or tv_forgetting)");
}

double ParamMatrix::max_level() const {
  double level = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    level = std::max(level, family[static_cast<std::size_t>(j)].value(theta.col(j)));
  }
  return level;
}

double ParamMatrix::norm_bound() const {
  double sum = 0;
  for (const auto& f : family) sum += f.outer_radius() * f.outer_radius();
  return std::sqrt(sum);
}

Eigen::Index EstimatorLaw::packed_size() const {
  const Eigen::Index n = regressor_dim();
  return params.theta.size() + 2 * SymMat<double>::packed_size(n);
}

EstimatorLaw make_law(LawVariant variant, ParamMatrix theta0, const SymMat<double>& gamma0,
                      const LawGains& gains, const SymMat<double>& omega0) {
  const Eigen::Index n = theta0.theta.rows();
  if (n == 0 || theta0.theta.cols() == 0) throw PreconditionError("make_law: empty theta");
  if (static_cast<std::size_t>(theta0.theta.cols()) != theta0.family.size()) {
    throw PreconditionError("make_law: one convex bound per theta column is required");
  }
  if (gamma0.dim() != n) throw PreconditionError("make_law: Gamma0 must be N x N");
  const auto g_eig = sym_eig(gamma0);
  if (!(g_eig.values(0) > 0)) throw PreconditionError("make_law: Gamma0 must be positive definite");

  EstimatorLaw law;
  law.variant = variant;
  law.gamma0 = gamma0;
  law.rate.gamma = gamma0;
  law.rate.bound = gains.gamma_bound;
  law.rate.lambda_gamma = gains.lambda_gamma;
  law.rate.kappa = gains.kappa;
  law.info.lambda_omega = gains.lambda_omega;
  law.info.omega = omega0.dim() == 0 ? SymMat<double>(n) : omega0;
  if (law.info.omega.dim() != n) throw PreconditionError("make_law: Omega0 must be N x N");
  law.params = std::move(theta0);

  if (variant == LawVariant::kStatic) {
    law.gamma_min = g_eig.values(0);
    return law;
  }
  if (!(gains.lambda_gamma > 0) || !(gains.lambda_omega > 0)) {
    throw PreconditionError("make_law: lambda_Gamma and lambda_Omega must be positive");
  }
  const double gamma_max = law.rate.gamma_max();
  if (!(gains.kappa > 1.0 / gamma_max)) {
    throw PreconditionError("make_law: kappa must exceed 1/Gamma_max");
  }
  if (variant == LawVariant::kTvProjected && law.rate.bound.value(gamma0.dense()) > 1.0) {
    throw PreconditionError("make_law: Gamma0 lies outside {F_Gamma <= 1}");
  }
  if (variant == LawVariant::kTvForgetting && g_eig.values(n - 1) > gamma_max) {
    throw PreconditionError("make_law: |Gamma0| exceeds Gamma_max");
  }
  if (law.params.max_level() > 1.0) {
    throw PreconditionError("make_law: theta0 lies outside Xi_1");
  }
  const auto o_eig = sym_eig(law.info.omega).values;
  if (o_eig(0) < 0.0 || o_eig(n - 1) > 1.0) {
    throw PreconditionError("make_law: Omega0 must satisfy 0 <= Omega0 <= I");
  }
  law.gamma_min = 1.0 / (1.0 / g_eig.values(0) + gains.kappa);
  return law;
}

MatXd theta_rhs(const EstimatorLaw& law, const MatXd& Y, const std::vector<Branch>& branches) {
  if (Y.rows() != law.params.theta.rows() || Y.cols() != law.params.theta.cols()) {
    throw PreconditionError("theta_rhs: Y must have the shape of theta");
  }
  if (law.variant == LawVariant::kStatic) return law.gamma0.dense() * Y;
  return proj_gamma_matrix<double>(law.params.theta, Y, law.params.family, law.rate.gamma.dense(),
                                   branches);
}

namespace {

MatXd information_update(const LearningRateState& state, const SymMat<double>& omega) {
  const MatXd g = state.gamma.dense();
  return g - state.kappa * g * omega.dense() * g;
}

}  // namespace

GammaRate gamma_rhs(const LearningRateState& state, const SymMat<double>& omega, Branch branch) {
  const MatXd update = information_update(state, omega);
  const auto proj = proj_pd<double>(state.gamma.dense(), update, state.bound, branch);
  return {state.lambda_gamma * proj.output, proj.rho};
}

ProjectionBranches active_branches(const EstimatorLaw& law, const MatXd& Y) {
  ProjectionBranches out;
  out.gamma = Branch::kInactive;
  if (law.variant == LawVariant::kStatic) return out;
  const MatXd g = law.rate.gamma.dense();
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    const bool on = proj_gamma_active<double>(law.params.theta.col(j), Y.col(j),
                                              law.params.family[static_cast<std::size_t>(j)], g);
    out.theta.push_back(on ? Branch::kActive : Branch::kInactive);
  }
  if (law.variant == LawVariant::kTvProjected &&
      proj_pd_active<double>(g, information_update(law.rate, law.info.omega), law.rate.bound)) {
    out.gamma = Branch::kActive;
  }
  return out;
}

double forgetting_factor(const LearningRateState& state) {
  return 1.0 - spectral_norm(state.gamma) / state.gamma_max();
}

MatXd gamma_rhs_forgetting(const LearningRateState& state, const SymMat<double>& omega) {
  return state.lambda_gamma * forgetting_factor(state) * information_update(state, omega);
}

VecXd pack_state(const EstimatorLaw& law) {
  VecXd out(law.packed_size());
  const Eigen::Index nt = law.params.theta.size();
  const Eigen::Index ns = law.rate.gamma.packed().size();
  out.head(nt) = Eigen::Map<const VecXd>(law.params.theta.data(), nt);
  out.segment(nt, ns) = law.rate.gamma.packed();
  out.tail(ns) = law.info.omega.packed();
  return out;
}

void unpack_state(EstimatorLaw& law, const Eigen::Ref<const VecXd>& packed) {
  const Eigen::Index nt = law.params.theta.size();
  const Eigen::Index ns = law.rate.gamma.packed().size();
  if (packed.size() != nt + 2 * ns) throw PreconditionError("unpack_state: length mismatch");
  Eigen::Map<VecXd>(law.params.theta.data(), nt) = packed.head(nt);
  law.rate.gamma.packed() = packed.segment(nt, ns);
  law.info.omega.packed() = packed.tail(ns);
}

LawDerivative law_rhs(const EstimatorLaw& law, const MatXd& Y, const VecXd& phi,
                      const ProjectionBranches* branches) {
  LawDerivative out{VecXd::Zero(law.packed_size()), 1.0};
  const Eigen::Index nt = law.params.theta.size();
  const Eigen::Index ns = law.rate.gamma.packed().size();
  const MatXd d_theta = branches ? theta_rhs(law, Y, branches->theta) : theta_rhs(law, Y);
  out.packed.head(nt) = Eigen::Map<const VecXd>(d_theta.data(), nt);
  if (law.variant == LawVariant::kStatic) return out;

  MatXd d_gamma;
  if (law.variant == LawVariant::kTvProjected) {
    auto rate = gamma_rhs(law.rate, law.info.omega, branches ? branches->gamma : Branch::kNatural);
    d_gamma = std::move(rate.d_gamma);
    out.rho = rate.rho;
  } else {
    out.rho = forgetting_factor(law.rate);
    d_gamma = law.rate.lambda_gamma * out.rho * information_update(law.rate, law.info.omega);
  }
  out.packed.segment(nt, ns) = SymMat<double>::from_upper(d_gamma).packed();
  out.packed.tail(ns) = omega_rhs(law.info.omega.packed(), phi, law.info.lambda_omega);
  return out;
}

void check_invariants(const EstimatorLaw& law, double t) {
  if (!all_finite(pack_state(law))) throw IntegrationError(t, "state", "non-finite estimator state");
  if (law.variant == LawVariant::kStatic) return;
  const double level = law.params.max_level();
  if (level > 1.0 + tol::kThetaSet) {
    throw IntegrationError(t, "theta", "f_j(theta_j) = " + std::to_string(level) + " > 1");
  }
  const auto g = sym_eig(law.rate.gamma).values;
  const double gmax = law.rate.gamma_max();
  if (g(0) < law.gamma_min - tol::kGammaEig || g(g.size() - 1) > gmax + tol::kGammaEig) {
    throw IntegrationError(t, "Gamma",
                           "eigenvalues [" + std::to_string(g(0)) + ", " +
                               std::to_string(g(g.size() - 1)) + "] outside [" +
                               std::to_string(law.gamma_min) + ", " + std::to_string(gmax) + "]");
  }
  const auto o = sym_eig(law.info.omega).values;
  if (o(0) < -tol::kOmegaEig || o(o.size() - 1) > 1.0 + tol::kOmegaEig) {
    throw IntegrationError(t, "Omega", "eigenvalues leave [0, 1]");
  }
}

EstimatorLaw estimator_step(const EstimatorLaw& law, const MatXd& Y, const VecXd& phi, double dt) {
  if (!(dt > 0)) throw PreconditionError("estimator_step: dt must be positive");
  if (phi.size() != law.regressor_dim()) throw PreconditionError("estimator_step: phi length");
  EstimatorLaw work = law;
  auto rhs = [&](double, const VecXd& s) {
    unpack_state(work, s);
    return law_rhs(work, Y, phi).packed;
  };
  const VecXd next = integrate_step(rhs, law.info.t, pack_state(law), dt);
  EstimatorLaw out = law;
  unpack_state(out, next);
  out.info.t = law.info.t + dt;
  out.rate.rho_last = law_rhs(out, Y, phi).rho;
  check_invariants(out, out.info.t);
  return out;
}

}  // namespace tvlr
