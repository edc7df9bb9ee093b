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

#include "tvlr/error_models.hpp"

#include <cmath>
#include <numbers>

#include "tvlr/errors.hpp"

namespace tvlr {

namespace {
// Step instants closer than this (relative to the period) snap onto the step.
constexpr double kStepSnap = 1e-9;
}  // namespace

CommandSignal::CommandSignal(CommandSpec spec) : spec_(spec) {
  if (spec_.kind == CommandSpec::Kind::kStepTrain && !(spec_.period > 0)) {
    throw PreconditionError("step_train: period must be positive");
  }
}

double CommandSignal::level(long index) const {
  if (index < 0) return 0.0;
  return index % 2 == 0 ? spec_.amplitude : -spec_.amplitude;
}

double CommandSignal::operator()(double t) const {
  switch (spec_.kind) {
    case CommandSpec::Kind::kZero: return 0.0;
    case CommandSpec::Kind::kConstant: return spec_.value;
    case CommandSpec::Kind::kSinusoid:
      return spec_.amplitude * std::sin(2.0 * std::numbers::pi * spec_.frequency * t);
    case CommandSpec::Kind::kStepTrain:
      return level(static_cast<long>(std::floor(t / spec_.period + kStepSnap)));
  }
  return 0.0;
}

double CommandSignal::left(double t) const {
  if (spec_.kind != CommandSpec::Kind::kStepTrain) return (*this)(t);
  return level(static_cast<long>(std::ceil(t / spec_.period - kStepSnap)) - 1);
}

CommandSignal make_command(const CommandSpec& spec) { return CommandSignal(spec); }

UncertaintyProfile::UncertaintyProfile(MatXd base, double amplitude, double frequency)
    : base_(std::move(base)), amplitude_(amplitude), frequency_(frequency) {
  const double norm = base_.norm();
  if (norm > 0) {
    direction_ = base_ / norm;
  } else {
    direction_ = MatXd::Zero(base_.rows(), base_.cols());
    if (direction_.size() > 0) direction_(0, 0) = 1.0;
  }
}

MatXd UncertaintyProfile::theta_star(double t) const {
  if (amplitude_ == 0.0) return base_;
  return base_ + amplitude_ * std::sin(2.0 * std::numbers::pi * frequency_ * t) * direction_;
}

MatXd UncertaintyProfile::theta_star_dot(double t) const {
  const double w = 2.0 * std::numbers::pi * frequency_;
  if (amplitude_ == 0.0) return MatXd::Zero(base_.rows(), base_.cols());
  return amplitude_ * w * std::cos(w * t) * direction_;
}

double UncertaintyProfile::theta_star_d_max() const {
  return std::abs(amplitude_) * 2.0 * std::numbers::pi * std::abs(frequency_);
}

PlantModel f16_plant() {
  PlantModel p;
  p.A.resize(3, 3);
  p.A << -0.6398, 0.9378, 0.0,
         -1.5679, -0.8791, 0.0,
          0.0, 1.0, 0.0;
  p.B.resize(3, 1);
  p.B << -0.0777, -6.5121, 0.0;
  p.Bz.resize(3, 1);
  p.Bz << 0.0, 0.0, -1.0;
  return p;
}

MatXd f16_gain() {
  MatXd k(3, 1);
  k << 0.1965, -0.3835, -1.0;
  return k;
}

MatXd f16_theta_star() {
  MatXd t(3, 1);
  t << 0.1965, -0.03835, 0.0;
  return t;
}

UncertaintyProfile make_uncertainty(const UncertaintySpec& spec, Eigen::Index rows,
                                    Eigen::Index cols) {
  MatXd base;
  switch (spec.kind) {
    case UncertaintySpec::Kind::kConstantPaper:
      base = f16_theta_star();
      break;
    case UncertaintySpec::Kind::kConstant:
      base = spec.theta_star;
      break;
    case UncertaintySpec::Kind::kSinusoid:
      base = spec.theta_star.size() > 0 ? spec.theta_star : f16_theta_star();
      break;
  }
  if (base.rows() != rows || base.cols() != cols) {
    throw PreconditionError("uncertainty: theta* must be " + std::to_string(rows) + "x" +
                            std::to_string(cols));
  }
  if (!all_finite(base)) throw PreconditionError("uncertainty: non-finite theta*");
  if (spec.kind == UncertaintySpec::Kind::kSinusoid) {
    return UncertaintyProfile(std::move(base), spec.amplitude, spec.frequency);
  }
  return UncertaintyProfile(std::move(base), 0.0, 0.0);
}

ErrorModelScenario make_scenario(PlantModel plant, MatXd K, const MatXd& Q,
                                 const UncertaintySpec& uncertainty, const CommandSpec& command,
                                 VecXd x0) {
  const Eigen::Index n = plant.A.rows();
  if (plant.A.cols() != n || plant.B.rows() != n || plant.Bz.rows() != n ||
      plant.Bz.cols() != 1 || K.rows() != n || K.cols() != plant.B.cols() || Q.rows() != n ||
      Q.cols() != n) {
    throw PreconditionError("scenario: inconsistent plant, gain or Q dimensions");
  }
  if (!all_finite(plant.A) || !all_finite(plant.B) || !all_finite(plant.Bz) || !all_finite(K)) {
    throw PreconditionError("scenario: non-finite plant entries");
  }
  if ((Q - Q.transpose()).norm() > 0) throw PreconditionError("scenario: Q must be symmetric");
  if (x0.size() == 0) x0 = VecXd::Zero(n);
  if (x0.size() != n) throw PreconditionError("scenario: x0 has the wrong length");

  ErrorModelScenario s;
  s.reference.Am = plant.A - plant.B * K.transpose();
  s.reference.Bz = plant.Bz;
  s.reference.K = std::move(K);
  s.cert = solve_lyapunov(s.reference.Am, SymMat<double>::from_upper(Q));
  s.uncertainty = make_uncertainty(uncertainty, n, plant.B.cols());
  s.command = make_command(command);
  s.PB = s.cert.P.dense() * plant.B;
  s.plant = std::move(plant);
  s.x0 = x0;
  s.xhat0 = x0;
  return s;
}

ErrorModelScenario make_f16_scenario(const UncertaintySpec& uncertainty,
                                     const CommandSpec& command) {
  return make_scenario(f16_plant(), f16_gain(), MatXd::Identity(3, 3), uncertainty, command);
}

VecXd reference_rhs(const ErrorModelScenario& s, const VecXd& xhat, double z_cmd) {
  return s.reference.Am * xhat + s.reference.Bz.col(0) * z_cmd;
}

ClosedLoopEval closed_loop_rhs(const ErrorModelScenario& s, const VecXd& x, const VecXd& xhat,
                               const MatXd& theta, double t, double z_cmd) {
  const auto& p = s.plant;
  ClosedLoopEval out;
  out.phi = x;
  out.u = -s.reference.K.transpose() * x - theta.transpose() * out.phi;
  const VecXd injected = out.u + s.uncertainty.theta_star(t).transpose() * out.phi;
  out.dx = p.A * x + p.B * injected + p.Bz.col(0) * z_cmd;
  out.dxhat = reference_rhs(s, xhat, z_cmd);
  out.e = xhat - x;
  out.Y = -out.phi * (out.e.transpose() * s.PB);
  return out;
}

}  // namespace tvlr
