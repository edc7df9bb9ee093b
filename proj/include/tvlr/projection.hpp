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

#ifndef TVLR_PROJECTION_HPP
#define TVLR_PROJECTION_HPP

// Continuous projection operators. The Gamma-projection keeps each column
// of a parameter matrix inside a sublevel set {f_j <= 1}; the positive
// definite projection scales an update for a learning-rate matrix by
// rho in [0, 1] near the boundary of {F <= 1}.

#include <Eigen/Dense>

#include <concepts>
#include <vector>

#include "tvlr/errors.hpp"
#include "tvlr/numerics.hpp"

namespace tvlr {

enum class NormKind { kVector2, kFrobenius };

/// f(x) = (|x|^2 - cap^2) / (2 eps cap + eps^2). Zero on |x| = cap and one
/// on |x| = cap + eps, so {f <= 1} is the ball of radius cap + eps.
template <typename Scalar>
class ConvexBound {
 public:
  ConvexBound(Scalar cap, Scalar margin, NormKind kind = NormKind::kVector2)
      : cap_(cap), margin_(margin), kind_(kind) {
    if (!(margin > 0)) throw PreconditionError("ConvexBound: margin must be positive");
    if (!(cap >= 0)) throw PreconditionError("ConvexBound: cap must be non-negative");
  }

  Scalar cap() const { return cap_; }
  Scalar margin() const { return margin_; }
  NormKind kind() const { return kind_; }

  /// Radius of the {f <= 1} ball.
  Scalar outer_radius() const { return cap_ + margin_; }

  template <typename Derived>
  Scalar value(const Eigen::MatrixBase<Derived>& x) const {
    return (x.squaredNorm() - cap_ * cap_) / denominator();
  }

  template <typename Derived>
  Mat<Scalar> gradient(const Eigen::MatrixBase<Derived>& x) const {
    return (Scalar(2) / denominator()) * x;
  }

  /// 2 eps cap + eps^2, the scale of f between the two level sets.
  Scalar denominator() const { return Scalar(2) * margin_ * cap_ + margin_ * margin_; }

 private:
  Scalar cap_;
  Scalar margin_;
  NormKind kind_;
};

/// Anything exposing a scalar value and its gradient can drive the operators.
template <typename F, typename Scalar>
concept ConvexFunction = requires(const F& f, const Vec<Scalar>& x) {
  { f.value(x) } -> std::convertible_to<Scalar>;
  { f.gradient(x) } -> std::convertible_to<Mat<Scalar>>;
};

template <typename Scalar>
using ProjFamily = std::vector<ConvexBound<Scalar>>;

/// Which side of a projection switch to evaluate. kNatural decides from the
/// arguments; the forced values let an integrator hold one smooth branch over
/// a step.
enum class Branch { kNatural, kActive, kInactive };

/// True when the column correction applies: f(theta) > 0 and
/// y^T Gamma grad f(theta) > 0.
template <typename Scalar, ConvexFunction<Scalar> F>
bool proj_gamma_active(const Vec<Scalar>& theta, const Vec<Scalar>& y, const F& f,
                       const Mat<Scalar>& gamma) {
  if (!(f.value(theta) > 0)) return false;
  const Vec<Scalar> grad = f.gradient(theta);
  return grad.dot(gamma * y) > 0;
}

/// One column of the Gamma-projection. Returns Gamma y unless f(theta) > 0 and
/// y^T Gamma grad f(theta) > 0, in which case the component of Gamma y along
/// Gamma grad f is removed in proportion to f(theta).
template <typename Scalar, ConvexFunction<Scalar> F>
Vec<Scalar> proj_gamma_column(const Vec<Scalar>& theta, const Vec<Scalar>& y, const F& f,
                              const Mat<Scalar>& gamma, Branch branch = Branch::kNatural) {
  if (theta.size() != y.size() || gamma.rows() != theta.size() || gamma.cols() != theta.size()) {
    throw PreconditionError("proj_gamma_column: dimension mismatch");
  }
  const Vec<Scalar> gamma_y = gamma * y;
  if (branch == Branch::kInactive) return gamma_y;
  const Scalar f_val = f.value(theta);
  if (branch == Branch::kNatural && !(f_val > 0)) return gamma_y;
  const Vec<Scalar> grad = f.gradient(theta);
  const Scalar direction = grad.dot(gamma_y);
  if (branch == Branch::kNatural && !(direction > 0)) return gamma_y;
  const Vec<Scalar> gamma_grad = gamma * grad;
  const Scalar weight = grad.dot(gamma_grad);
  if (!(weight > 0)) {
    throw NumericalError("proj_gamma_column: vanishing gradient on an active boundary");
  }
  return gamma_y - gamma_grad * (direction / weight * f_val);
}

/// Columnwise Gamma-projection of an N x m update. `branches` is empty or
/// holds one entry per column.
template <typename Scalar>
Mat<Scalar> proj_gamma_matrix(const Mat<Scalar>& theta, const Mat<Scalar>& y,
                              const ProjFamily<Scalar>& family, const Mat<Scalar>& gamma,
                              const std::vector<Branch>& branches = {}) {
  if (theta.rows() != y.rows() || theta.cols() != y.cols() ||
      static_cast<std::size_t>(theta.cols()) != family.size() ||
      (!branches.empty() && branches.size() != family.size())) {
    throw PreconditionError("proj_gamma_matrix: dimension mismatch");
  }
  Mat<Scalar> out(y.rows(), y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const Branch b = branches.empty() ? Branch::kNatural : branches[static_cast<std::size_t>(j)];
    out.col(j) = proj_gamma_column<Scalar>(theta.col(j), y.col(j), family[j], gamma, b);
  }
  return out;
}

template <typename Scalar>
struct PdProjection {
  Mat<Scalar> output;
  Scalar rho;
};

template <typename Scalar>
bool proj_pd_active(const Mat<Scalar>& gamma, const Mat<Scalar>& y, const ConvexBound<Scalar>& bound) {
  return bound.value(gamma) > 0 && y.cwiseProduct(bound.gradient(gamma)).sum() > 0;
}

/// Positive definite projection, returned in its scalar form: output = rho Y
/// with rho = 1 - F(Gamma) when F(Gamma) > 0 and Tr[Y^T grad F(Gamma)] > 0,
/// otherwise rho = 1.
template <typename Scalar>
PdProjection<Scalar> proj_pd(const Mat<Scalar>& gamma, const Mat<Scalar>& y,
                             const ConvexBound<Scalar>& bound, Branch branch = Branch::kNatural) {
  if (gamma.rows() != y.rows() || gamma.cols() != y.cols()) {
    throw PreconditionError("proj_pd: dimension mismatch");
  }
  if (!all_finite(gamma) || !all_finite(y)) throw NumericalError("proj_pd: non-finite input");
  Scalar rho = 1;
  if (branch == Branch::kActive ||
      (branch == Branch::kNatural && proj_pd_active<Scalar>(gamma, y, bound))) {
    rho = Scalar(1) - bound.value(gamma);
  }
  return {rho * y, rho};
}

}  // namespace tvlr

#endif  // TVLR_PROJECTION_HPP
