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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "tvlr/errors.hpp"
#include "tvlr/excitation.hpp"

using namespace tvlr;

namespace {

constexpr double kPi = std::numbers::pi;

VecXd unit_circle(double t) {
  VecXd v(2);
  v << std::sin(t), std::cos(t);
  return v;
}

InfoMatrixState run_omega(InfoMatrixState s, const std::function<VecXd(double)>& phi, double dt,
                          double t_end) {
  const auto steps = static_cast<int>(std::lround(t_end / dt));
  for (int k = 0; k < steps; ++k) s = omega_step(s, phi(s.t), dt);
  return s;
}

// Exact update for phi held over [t, t + h]: Omega -> e^{-lh} Omega + (1 - e^{-lh}) S,
// obtained from the augmented linear system through expm.
VecXd exact_omega_update(const VecXd& packed, const VecXd& phi, double lambda, double h) {
  const Eigen::Index p = packed.size();
  const SymMat<double> target = SymMat<double>::from_upper(MatXd(phi * phi.transpose() / (1.0 + phi.squaredNorm())));
  MatXd aug = MatXd::Zero(p + 1, p + 1);
  aug.topLeftCorner(p, p) = -lambda * MatXd::Identity(p, p);
  aug.topRightCorner(p, 1) = lambda * target.packed();
  VecXd z(p + 1);
  z << packed, 1.0;
  return (expm(aug, h) * z).head(p);
}

}  // namespace

TEST(OmegaStep, ZeroStaysZero) {
  InfoMatrixState s{SymMat<double>(3), 10.0, 0.0};
  s = run_omega(s, [](double) { return VecXd(VecXd::Zero(3)); }, 1e-3, 1.0);
  EXPECT_EQ(s.omega.packed().norm(), 0.0);
}

TEST(OmegaStep, PureDecay) {
  InfoMatrixState s{SymMat<double>::identity(2), 10.0, 0.0};
  s = run_omega(s, [](double) { return VecXd(VecXd::Zero(2)); }, 1e-3, 0.3);
  // RK4 global error ~ t (lambda dt)^4 / 120
  EXPECT_NEAR(s.omega(0, 0), std::exp(-3.0), 1e-10);
  EXPECT_EQ(s.omega(1, 1), s.omega(0, 0));
  EXPECT_EQ(s.omega(0, 1), 0.0);
}

TEST(OmegaStep, ConstantScalarClosedForm) {
  InfoMatrixState s{SymMat<double>(1), 10.0, 0.0};
  s = run_omega(s, [](double) { return VecXd(VecXd::Ones(1)); }, 1e-3, 0.1);
  const double want = 0.5 * (1.0 - std::exp(-1.0));
  EXPECT_NEAR(want, 0.3161, 5e-5);
  EXPECT_NEAR(s.omega(0, 0), want, 1e-8);
}

TEST(OmegaStep, FourthOrderAgainstExactUpdate) {
  // Piecewise-constant phi switching every 0.05 s.
  const auto phi = [](double t) {
    const double k = std::floor(t / 0.05 + 1e-9);
    VecXd v(3);
    v << std::sin(k), std::cos(2 * k), 0.5 * k - 1.0;
    return v;
  };
  const double lambda = 10.0;
  std::vector<double> errors;
  for (double dt : {0.01, 0.005, 0.0025}) {
    InfoMatrixState s{SymMat<double>(3), lambda, 0.0};
    VecXd exact = VecXd::Zero(6);
    double err = 0;
    const int steps = static_cast<int>(std::lround(0.5 / dt));
    for (int k = 0; k < steps; ++k) {
      const VecXd p = phi(s.t);
      exact = exact_omega_update(exact, p, lambda, dt);
      s = omega_step(s, p, dt);
      err = std::max(err, (s.omega.packed() - exact).cwiseAbs().maxCoeff());
    }
    errors.push_back(err);
  }
  EXPECT_NEAR(std::log2(errors[0] / errors[1]), 4.0, 0.2);
  EXPECT_NEAR(std::log2(errors[1] / errors[2]), 4.0, 0.2);
}

TEST(OmegaStep, EigenvaluesStayInUnitInterval) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    const MatXd amp = tvlr::testing::random_matrix(rng, n, 3, 5.0);
    InfoMatrixState s{SymMat<double>::identity(n, tvlr::testing::uniform(rng, 0.0, 1.0)), 10.0, 0.0};
    for (int k = 0; k < 1000; ++k) {
      VecXd w(3);
      w << std::sin(0.01 * k), std::cos(0.037 * k), std::sin(0.11 * k) * std::exp(0.002 * k);
      s = omega_step(s, amp * w, 1e-3);
      const auto e = sym_eig(s.omega);
      ASSERT_GE(e.values.minCoeff(), -1e-9);
      ASSERT_LE(e.values.maxCoeff(), 1 + 1e-9);
    }
  }
}

TEST(Gram, ConstantRankOne) {
  const auto trace = sample_regressor([](double) { VecXd v(2); v << 1, 0; return v; }, 0, 1, 100);
  const MatXd g = gram_integral(trace, 0, 1).dense();
  MatXd want = MatXd::Zero(2, 2);
  want(0, 0) = 1;
  EXPECT_LE((g - want).norm(), 1e-14);
}

TEST(Gram, SinCosIsPiIdentity) {
  const auto trace = sample_regressor(unit_circle, 0, 2 * kPi, 2000);
  const MatXd g = gram_integral(trace, 0, 2 * kPi).dense();
  EXPECT_LE((g - kPi * MatXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Gram, ScalarOne) {
  const auto trace = sample_regressor([](double) { return VecXd(VecXd::Ones(1)); }, 0, 3, 30);
  EXPECT_NEAR(gram_integral(trace, 0, 3)(0, 0), 3.0, 1e-14);
}

TEST(Gram, SimpsonOrder) {
  // int_0^1 (e^t, t^2) (e^t, t^2)^T dt against closed forms.
  const auto phi = [](double t) { VecXd v(2); v << std::exp(t), t * t; return v; };
  MatXd exact(2, 2);
  const double e = std::exp(1.0);
  exact << (e * e - 1) / 2, e - 2, e - 2, 0.2;
  const double e1 = (gram_integral(sample_regressor(phi, 0, 1, 16), 0, 1).dense() - exact).norm();
  const double e2 = (gram_integral(sample_regressor(phi, 0, 1, 32), 0, 1).dense() - exact).norm();
  EXPECT_NEAR(e1 / e2, 16.0, 1.0);
}

TEST(Gram, OutsideTraceThrows) {
  const auto trace = sample_regressor(unit_circle, 0, 1, 10);
  EXPECT_THROW(gram_integral(trace, 0, 2), RangeError);
}

TEST(RegressorTraceTest, RejectsNonUniform) {
  EXPECT_THROW(RegressorTrace({0.0, 1.0, 3.0}, MatXd::Zero(3, 1)), PreconditionError);
}

TEST(DetectFe, ConstantNotExciting) {
  const auto trace = sample_regressor([](double) { VecXd v(2); v << 1, 0; return v; }, 0, 1, 100);
  const auto r = detect_fe(trace, 0.2, 0.8, ExcitationConfig{});
  EXPECT_EQ(r.alpha, 0.0);
  EXPECT_EQ(r.kind, ExcitationKind::kNone);
  EXPECT_FALSE(r.meets_assumption3);
}

TEST(DetectFe, ThresholdArithmetic) {
  ExcitationConfig c{0.5, 10.0, 2.0, 0.5, 10.0};
  const double want = 4.0 / (25.0 * std::exp(-1.0));
  EXPECT_NEAR(want, 0.4349, 5e-5);
  EXPECT_NEAR(excitation_threshold(c, 2.0, 0.1), want, 1e-14);
}

TEST(DetectFe, SinCos) {
  const auto trace = sample_regressor(unit_circle, 0, 2 * kPi, 2000);
  const auto r = detect_fe(trace, 0, 2 * kPi, ExcitationConfig{});
  EXPECT_NEAR(r.alpha, kPi, 1e-6);
  EXPECT_EQ(r.kind, ExcitationKind::kFinite);
  EXPECT_NEAR(r.d, 2.0, 1e-12);
}

TEST(DetectPe, SinCos) {
  const auto trace = sample_regressor(unit_circle, 0, 6 * kPi, 6000);
  const auto r = detect_pe(trace, 2 * kPi, 0.1);
  EXPECT_NEAR(r.alpha, kPi, 1e-5);
  EXPECT_EQ(r.kind, ExcitationKind::kPersistent);
}

TEST(DetectPe, DecayingSignalIsNotPersistent) {
  const auto trace = sample_regressor([](double t) { VecXd v(1); v << std::exp(-t); return v; }, 0, 40, 4000);
  const double early = detect_pe(sample_regressor([](double t) { VecXd v(1); v << std::exp(-t); return v; }, 0, 2, 200), 1, 0.1).alpha;
  const auto r = detect_pe(trace, 1, 0.1);
  EXPECT_LT(r.alpha, 1e-12);
  EXPECT_LT(r.alpha, early);
  // Below the persistent threshold for the default gains.
  const auto with_cfg = detect_pe(trace, 1, 0.1, ExcitationConfig{});
  EXPECT_FALSE(with_cfg.meets_assumption3);
}

TEST(DetectPe, ScalarOne) {
  const auto trace = sample_regressor([](double) { return VecXd(VecXd::Ones(1)); }, 0, 5, 500);
  EXPECT_NEAR(detect_pe(trace, 1, 0.5).alpha, 1.0, 1e-12);
}

TEST(Timeline, OmegaFeAndT3) {
  ExcitationConfig c{0.5, 10.0, 2.0, 0.5, 10.0};
  ExcitationReport r;
  r.t2 = 3.0;
  r.meets_assumption3 = true;
  const auto tl = propagation_timeline(r, c);
  EXPECT_NEAR(tl.omega_fe, 0.4, 1e-15);
  EXPECT_GT(tl.omega_fe, 1.0 / (c.kappa * c.gamma_max));
  c.rho_omega = std::exp(-1.0);
  EXPECT_NEAR(propagation_timeline(r, c).t3, 3.1, 1e-14);
  EXPECT_EQ(decay_time(1.0, 10.0), 0.0);
}

TEST(Timeline, GammaPhase) {
  ExcitationConfig c;
  ExcitationReport r;
  r.t2 = 1.0;
  r.meets_assumption3 = true;
  const auto tl = propagation_timeline(r, c, GammaPhaseInput{0.9, 0.5, 45.0});
  ASSERT_TRUE(tl.has_gamma_phase);
  EXPECT_NEAR(tl.gamma_fe, 50.0, 1e-12);
  EXPECT_NEAR(tl.t4, tl.t3 - std::log(0.9) / 0.5, 1e-12);
  EXPECT_THROW(propagation_timeline(r, c, GammaPhaseInput{0.3, 0.5, 45.0}), PreconditionError);
  r.meets_assumption3 = false;
  EXPECT_THROW(propagation_timeline(r, c), PreconditionError);
}

// After a verified finite excitation, min eig Omega >= Omega_FE on [t2, t3].
TEST(Timeline, OmegaHoldsExcitation) {
  const double T = 0.1;
  const auto phi = [T](double t) { return VecXd(10.0 * unit_circle(2 * kPi * t / T)); };
  const double dt = 1e-4;
  const auto trace = sample_regressor(phi, 0, T, 1000);
  ExcitationConfig c;  // kappa 0.5, Gamma_max 100, k 2, rho 0.5, lambda 10
  const auto report = detect_fe(trace, 0, T, c);
  ASSERT_TRUE(report.meets_assumption3) << report.alpha << " < " << report.alpha0;
  const auto tl = propagation_timeline(report, c);

  InfoMatrixState s{SymMat<double>(2), c.lambda_omega, 0.0};
  double worst = 1e9;
  const auto steps = static_cast<int>(std::lround(tl.t3 / dt));
  for (int k = 0; k < steps; ++k) {
    const VecXd p = s.t < T - 1e-12 ? VecXd(phi(s.t + dt / 2)) : VecXd(VecXd::Zero(2));
    s = omega_step(s, p, dt);
    if (s.t >= report.t2 - 1e-12) worst = std::min(worst, min_eig(s.omega));
  }
  EXPECT_GE(worst, tl.omega_fe - 1e-6);
}
