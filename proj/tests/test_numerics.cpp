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
#include "tvlr/error_models.hpp"
#include "tvlr/errors.hpp"
#include "tvlr/numerics.hpp"

using namespace tvlr;
using tvlr::testing::random_matrix;
using tvlr::testing::random_spd;
using tvlr::testing::random_symmetric;

TEST(SymMat, PackedLayoutIsUpperTriangleRowWise) {
  MatXd m(3, 3);
  m << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  const auto s = SymMat<double>::from_upper(m);
  EXPECT_EQ(s.packed().size(), 6);
  for (int k = 0; k < 6; ++k) EXPECT_EQ(s.packed()(k), k + 1);
  EXPECT_EQ(s.dense(), m);
  EXPECT_EQ(s(2, 1), 5);
}

TEST(SymEig, Identity) {
  const auto e = sym_eig(SymMat<double>::identity(3));
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(e.values(i), 1.0);
}

TEST(SymEig, DiagonalSortedWithAxisVectors) {
  MatXd m(2, 2);
  m << 2, 0, 0, -1;
  const auto e = sym_eig(SymMat<double>::from_upper(m));
  EXPECT_DOUBLE_EQ(e.values(0), -1.0);
  EXPECT_DOUBLE_EQ(e.values(1), 2.0);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(e.vectors(0, 1)), 1.0, 1e-15);
}

TEST(SymEig, SwapMatrix) {
  MatXd m(2, 2);
  m << 0, 1, 1, 0;
  const auto e = sym_eig(SymMat<double>::from_upper(m));
  EXPECT_NEAR(e.values(0), -1.0, 1e-15);
  EXPECT_NEAR(e.values(1), 1.0, 1e-15);
}

TEST(SymEig, ReconstructsRandomMatrices) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + trial % 12;
    const MatXd m = random_symmetric(rng, n, 3.0);
    const auto e = sym_eig(SymMat<double>::from_upper(m));
    const MatXd back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    EXPECT_LE((back - m).norm(), 1e-10 * std::max(1.0, m.norm()));
    EXPECT_LE((e.vectors.transpose() * e.vectors - MatXd::Identity(n, n)).norm(), 1e-12);
    // Cross-check against Eigen's solver.
    Eigen::SelfAdjointEigenSolver<MatXd> ref(m);
    EXPECT_LE((ref.eigenvalues() - e.values).norm(), 1e-10 * std::max(1.0, m.norm()));
  }
}

TEST(SymEig, RejectsNonFinite) {
  MatXd m = MatXd::Identity(2, 2);
  m(0, 1) = m(1, 0) = std::nan("");
  EXPECT_THROW(sym_eig(SymMat<double>::from_upper(m)), NumericalError);
}

TEST(Lyapunov, ScaledIdentity) {
  const MatXd am = -0.5 * MatXd::Identity(3, 3);
  const auto cert = solve_lyapunov(am, SymMat<double>::identity(3));
  EXPECT_LE((cert.P.dense() - MatXd::Identity(3, 3)).norm(), 1e-14);
  EXPECT_DOUBLE_EQ(cert.q0, 1.0);
}

TEST(Lyapunov, Scalar) {
  const MatXd am = MatXd::Constant(1, 1, -1.0);
  const auto cert = solve_lyapunov(am, SymMat<double>::identity(1, 2.0));
  EXPECT_NEAR(cert.P(0, 0), 1.0, 1e-15);
}

TEST(Lyapunov, F16MatchesQuadrature) {
  const PlantModel plant = f16_plant();
  const MatXd am = plant.A - plant.B * f16_gain().transpose();
  const auto cert = solve_lyapunov(am, SymMat<double>::identity(3));
  const double slowest = -Eigen::EigenSolver<MatXd>(am).eigenvalues().real().maxCoeff();
  ASSERT_GT(slowest, 0.0);
  // exp(-2 s t) below 1e-14 past the horizon.
  const double horizon = std::ceil(40.0 / slowest);
  const MatXd oracle = tvlr::testing::lyapunov_integral_oracle(am, MatXd::Identity(3, 3), horizon, 0.25);
  EXPECT_LE(tvlr::testing::rel_err(cert.P.dense(), oracle), 1e-6);
}

TEST(Lyapunov, RandomHurwitz) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    const MatXd am = -random_spd(rng, n, 0.5) + 0.3 * random_matrix(rng, n, n).triangularView<Eigen::StrictlyUpper>().toDenseMatrix();
    const MatXd q = random_spd(rng, n, 0.1);
    const auto cert = solve_lyapunov(am, SymMat<double>::from_upper(q));
    const MatXd p = cert.P.dense();
    EXPECT_LE((am.transpose() * p + p * am + q).norm(), 1e-10 * std::max(1.0, q.norm()));
    EXPECT_GT(cert.p_min, 0.0);
    EXPECT_LE(cert.p_min, cert.p_max);
  }
}

TEST(Lyapunov, RejectsUnstable) {
  const MatXd am = MatXd::Identity(2, 2);
  EXPECT_THROW(solve_lyapunov(am, SymMat<double>::identity(2)), CertificateError);
}

TEST(Expm, ZeroIsIdentity) {
  EXPECT_EQ(expm(MatXd::Zero(3, 3)), MatXd::Identity(3, 3));
}

TEST(Expm, ScalarDecay) {
  EXPECT_NEAR(expm(MatXd::Constant(1, 1, -1.0))(0, 0), std::exp(-1.0), 1e-15);
}

TEST(Expm, QuarterRotation) {
  MatXd m(2, 2);
  m << 0, 1, -1, 0;
  const MatXd r = expm(m, std::numbers::pi / 2);
  MatXd want(2, 2);
  want << 0, 1, -1, 0;
  EXPECT_LE((r - want).norm(), 1e-14);
}

TEST(Expm, SemigroupAndOracle) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    MatXd m = random_matrix(rng, 4, 4);
    m *= tvlr::testing::uniform(rng, 0.01, 2.0) / m.norm();
    const double s = tvlr::testing::uniform(rng, 0.0, 2.0);
    const double t = tvlr::testing::uniform(rng, 0.0, 2.0);
    EXPECT_LE((expm(m, s + t) - expm(m, s) * expm(m, t)).norm(), 1e-10);
    EXPECT_LE(tvlr::testing::rel_err(expm(m, s), tvlr::testing::oracle_expm(m * s)), 1e-12);
  }
}

TEST(Expm, LargeNormUsesSquaring) {
  MatXd m(2, 2);
  m << -20, 3, 0, -15;
  EXPECT_LE(tvlr::testing::rel_err(expm(m), tvlr::testing::oracle_expm(m)), 1e-12);
}
