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

#ifndef TVLR_ERROR_MODELS_HPP
#define TVLR_ERROR_MODELS_HPP

// State-feedback MRAC error model: plant with matched uncertainty, Hurwitz
// reference model, uncertainty trajectory and command signal.
//
//   x'    = A x + B (u + theta*(t)^T phi) + Bz z_cmd,  phi = x
//   xhat' = A_m xhat + Bz z_cmd,                       A_m = A - B K^T
//   u     = -K^T x - theta^T phi
//   e     = xhat - x,  Y = -phi e^T P B
//
// so that e' = A_m e + B (theta - theta*)^T phi.

#include "tvlr/numerics.hpp"

namespace tvlr {

struct CommandSpec {
  enum class Kind { kZero, kConstant, kStepTrain, kSinusoid };
  Kind kind = Kind::kStepTrain;
  double value = 0;       // constant
  double period = 10.0;   // step train, s
  double amplitude = 5.0; // step train and sinusoid
  double frequency = 0;   // sinusoid, Hz

  static CommandSpec zero() { return {Kind::kZero}; }
  static CommandSpec constant(double v) { return {Kind::kConstant, v}; }
  static CommandSpec step_train(double period, double amplitude) {
    return {Kind::kStepTrain, 0, period, amplitude};
  }
  static CommandSpec sinusoid(double amplitude, double frequency) {
    return {Kind::kSinusoid, 0, 0, amplitude, frequency};
  }
};

/// Scalar command z_cmd(t), right-continuous, defined for t >= 0. The step
/// train is +amplitude on [0, P), -amplitude on [P, 2P), and so on.
class CommandSignal {
 public:
  explicit CommandSignal(CommandSpec spec = CommandSpec::zero());

  double operator()(double t) const;
  /// Limit from the left. Differs from operator() only at step instants.
  double left(double t) const;
  /// Value seen by an integrator stage at `tau` inside the step (start, start + dt]:
  /// stages after the step start use left limits, so a switch that falls on
  /// the step end does not leak into the step.
  double within_step(double step_start, double tau) const {
    return tau > step_start ? left(tau) : (*this)(tau);
  }

  const CommandSpec& spec() const { return spec_; }

 private:
  double level(long index) const;

  CommandSpec spec_;
};

CommandSignal make_command(const CommandSpec& spec);

struct UncertaintySpec {
  enum class Kind { kConstantPaper, kConstant, kSinusoid };
  Kind kind = Kind::kConstantPaper;
  MatXd theta_star;        // kConstant; also the base of kSinusoid when non-empty
  double amplitude = 0;    // kSinusoid
  double frequency = 0;    // kSinusoid, Hz

  static UncertaintySpec constant_paper() { return {}; }
  static UncertaintySpec constant(MatXd value) { return {Kind::kConstant, std::move(value)}; }
  static UncertaintySpec sinusoid(double amplitude, double frequency) {
    return {Kind::kSinusoid, MatXd(), amplitude, frequency};
  }
};

/// theta*(t) = base + amplitude sin(2 pi f t) dir, with dir = base / |base|_F
/// (or the first unit column when base = 0). Norms are Frobenius.
class UncertaintyProfile {
 public:
  UncertaintyProfile() = default;
  UncertaintyProfile(MatXd base, double amplitude, double frequency);

  MatXd theta_star(double t) const;
  MatXd theta_star_dot(double t) const;
  double theta_star_max() const { return base_.norm() + std::abs(amplitude_); }
  double theta_star_d_max() const;

  const MatXd& base() const { return base_; }
  double amplitude() const { return amplitude_; }
  double frequency() const { return frequency_; }

 private:
  MatXd base_;
  MatXd direction_;
  double amplitude_ = 0;
  double frequency_ = 0;
};

struct PlantModel {
  MatXd A;   // n x n
  MatXd B;   // n x m
  MatXd Bz;  // n x 1
};

struct ReferenceModel {
  MatXd Am;  // A - B K^T
  MatXd Bz;
  MatXd K;   // n x m
};

struct ErrorModelScenario {
  PlantModel plant;
  ReferenceModel reference;
  UncertaintyProfile uncertainty;
  CommandSignal command;
  LyapunovCert<double> cert;
  MatXd PB;  // cert.P * plant.B, cached for Y
  VecXd x0;
  VecXd xhat0;

  Eigen::Index state_dim() const { return plant.A.rows(); }
  /// N, the regressor length (phi = x).
  Eigen::Index regressor_dim() const { return plant.A.rows(); }
  /// m, the number of parameter columns (plant inputs).
  Eigen::Index param_cols() const { return plant.B.cols(); }
};

/// Builds a scenario and certifies A - B K^T with Q. Throws CertificateError
/// when the reference model is not Hurwitz.
ErrorModelScenario make_scenario(PlantModel plant, MatXd K, const MatXd& Q,
                                 const UncertaintySpec& uncertainty, const CommandSpec& command,
                                 VecXd x0 = VecXd());

/// Linearized F-16 longitudinal model with integral pitch-rate tracking.
PlantModel f16_plant();
MatXd f16_gain();
MatXd f16_theta_star();

/// F-16 scenario with Q = I. The sinusoid uncertainty oscillates around the
/// constant theta* along its own direction.
ErrorModelScenario make_f16_scenario(const UncertaintySpec& uncertainty,
                                     const CommandSpec& command = CommandSpec::step_train(10.0, 5.0));

UncertaintyProfile make_uncertainty(const UncertaintySpec& spec, Eigen::Index rows,
                                    Eigen::Index cols);

struct ClosedLoopEval {
  VecXd dx;
  VecXd dxhat;
  VecXd e;
  VecXd u;
  VecXd phi;
  MatXd Y;  // N x m
};

/// xhat' alone; it depends on nothing but xhat and the command.
VecXd reference_rhs(const ErrorModelScenario& scenario, const VecXd& xhat, double z_cmd);

ClosedLoopEval closed_loop_rhs(const ErrorModelScenario& scenario, const VecXd& x,
                               const VecXd& xhat, const MatXd& theta, double t, double z_cmd);

inline ClosedLoopEval closed_loop_rhs(const ErrorModelScenario& scenario, const VecXd& x,
                                      const VecXd& xhat, const MatXd& theta, double t) {
  return closed_loop_rhs(scenario, x, xhat, theta, t, scenario.command(t));
}

}  // namespace tvlr

#endif  // TVLR_ERROR_MODELS_HPP
