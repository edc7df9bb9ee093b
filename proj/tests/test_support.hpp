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

#ifndef TVLR_TESTS_TEST_SUPPORT_HPP
#define TVLR_TESTS_TEST_SUPPORT_HPP

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "tvlr/numerics.hpp"

namespace tvlr::testing {

inline MatXd random_matrix(std::mt19937& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  MatXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

inline MatXd random_symmetric(std::mt19937& rng, Eigen::Index dim, double scale = 1.0) {
  const MatXd r = random_matrix(rng, dim, dim, scale);
  return (r + r.transpose()) / 2.0;
}

// R R^T + shift I
inline MatXd random_spd(std::mt19937& rng, Eigen::Index dim, double shift, double scale = 1.0) {
  const MatXd r = random_matrix(rng, dim, dim, scale);
  return r * r.transpose() + shift * MatXd::Identity(dim, dim);
}

inline double uniform(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Independent matrix exponential (Eigen's unsupported module).
inline MatXd oracle_expm(const MatXd& m) { return MatXd(m.exp()); }

// int_0^inf exp(A^T t) Q exp(A t) dt, 5-point Gauss-Legendre on panels of
// width h up to `horizon`.
inline MatXd lyapunov_integral_oracle(const MatXd& a, const MatXd& q, double horizon, double h) {
  static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                              0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                              0.2369268850561891, 0.2369268850561891};
  MatXd sum = MatXd::Zero(a.rows(), a.cols());
  for (double t0 = 0.0; t0 < horizon - 1e-12; t0 += h) {
    for (int k = 0; k < 5; ++k) {
      const double t = t0 + 0.5 * h * (1.0 + x[k]);
      const MatXd e = oracle_expm(a * t);
      sum += 0.5 * h * w[k] * e.transpose() * q * e;
    }
  }
  return sum;
}

inline double rel_err(const MatXd& got, const MatXd& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

}  // namespace tvlr::testing

#endif  // TVLR_TESTS_TEST_SUPPORT_HPP
