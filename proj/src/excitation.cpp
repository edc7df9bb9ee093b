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

#include "tvlr/excitation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tvlr/errors.hpp"
#include "tvlr/integrator.hpp"

namespace tvlr {

namespace {

// Relative floor below which a Gram eigenvalue counts as zero.
constexpr double kRankTolerance = 1e-10;

bool is_exciting(const SymMat<double>& gram, double alpha) {
  const double scale = std::max(1.0, max_eig(gram));
  return alpha > kRankTolerance * scale;
}

std::size_t snap(const RegressorTrace& trace, double t, const char* what) {
  const double h = trace.spacing();
  const double pos = (t - trace.t.front()) / h;
  if (pos < -1e-6 || pos > static_cast<double>(trace.size() - 1) + 1e-6) {
    throw RangeError(std::string("excitation window ") + what + " = " + std::to_string(t) +
                     " lies outside the trace");
  }
  return static_cast<std::size_t>(std::clamp(std::lround(pos), 0L,
                                             static_cast<long>(trace.size() - 1)));
}

double max_normalizer(const RegressorTrace& trace, std::size_t first, std::size_t last) {
  double d = 1.0;
  for (std::size_t k = first; k <= last; ++k) {
    d = std::max(d, 1.0 + trace.phi.row(static_cast<Eigen::Index>(k)).squaredNorm());
  }
  return d;
}

SymMat<double> gram_by_index(const RegressorTrace& trace, std::size_t first, std::size_t last) {
  const Eigen::Index n = trace.dim();
  const std::size_t intervals = last - first;
  const double h = trace.spacing();
  std::vector<double> w(intervals + 1, 0.0);
  if (intervals == 1) {
    w[0] = w[1] = 0.5 * h;
  } else {
    const std::size_t simpson = intervals % 2 == 0 ? intervals : intervals - 3;
    for (std::size_t k = 0; k + 2 <= simpson; k += 2) {
      w[k] += h / 3.0;
      w[k + 1] += 4.0 * h / 3.0;
      w[k + 2] += h / 3.0;
    }
    if (simpson != intervals) {
      const std::size_t k = simpson;
      w[k] += 3.0 * h / 8.0;
      w[k + 1] += 9.0 * h / 8.0;
      w[k + 2] += 9.0 * h / 8.0;
      w[k + 3] += 3.0 * h / 8.0;
    }
  }
  MatXd gram = MatXd::Zero(n, n);
  for (std::size_t k = 0; k <= intervals; ++k) {
    const auto row = trace.phi.row(static_cast<Eigen::Index>(first + k));
    gram.noalias() += w[k] * row.transpose() * row;
  }
  return SymMat<double>::from_upper(gram);
}

}  // namespace

VecXd omega_rhs(const VecXd& omega_packed, const VecXd& phi, double lambda_omega) {
  const Eigen::Index n = phi.size();
  const double normalizer = 1.0 + phi.squaredNorm();
  VecXd d(omega_packed.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j, ++k) {
      d(k) = lambda_omega * (phi(i) * phi(j) / normalizer - omega_packed(k));
    }
  }
  return d;
}

InfoMatrixState omega_step(const InfoMatrixState& state, const VecXd& phi, double dt) {
  if (!(dt > 0)) throw PreconditionError("omega_step: dt must be positive");
  if (phi.size() != state.omega.dim()) throw PreconditionError("omega_step: dimension mismatch");
  auto rhs = [&](double, const VecXd& x) { return omega_rhs(x, phi, state.lambda_omega); };
  InfoMatrixState next = state;
  next.omega.packed() = integrate_step(rhs, state.t, state.omega.packed(), dt);
  next.t = state.t + dt;
  return next;
}

RegressorTrace::RegressorTrace(std::vector<double> times, MatXd samples)
    : t(std::move(times)), phi(std::move(samples)) {
  if (t.size() < 2 || static_cast<Eigen::Index>(t.size()) != phi.rows()) {
    throw PreconditionError("RegressorTrace: need at least two samples, one row per time");
  }
  const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(h > 0)) throw PreconditionError("RegressorTrace: times must increase");
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (std::abs((t[k] - t[k - 1]) - h) > 1e-6 * h) {
      throw PreconditionError("RegressorTrace: samples must be uniformly spaced");
    }
  }
}

double RegressorTrace::spacing() const {
  return (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

RegressorTrace sample_regressor(const std::function<VecXd(double)>& phi, double t_begin,
                                double t_end, std::size_t intervals) {
  std::vector<double> times(intervals + 1);
  const double h = (t_end - t_begin) / static_cast<double>(intervals);
  const VecXd first = phi(t_begin);
  MatXd samples(static_cast<Eigen::Index>(intervals + 1), first.size());
  for (std::size_t k = 0; k <= intervals; ++k) {
    times[k] = t_begin + static_cast<double>(k) * h;
    samples.row(static_cast<Eigen::Index>(k)) = phi(times[k]).transpose();
  }
  return RegressorTrace(std::move(times), std::move(samples));
}

SymMat<double> gram_integral(const RegressorTrace& trace, double t1, double t2) {
  if (!(t2 > t1)) throw RangeError("gram_integral: window must satisfy t2 > t1");
  const std::size_t first = snap(trace, t1, "start");
  const std::size_t last = snap(trace, t2, "end");
  if (last <= first) throw RangeError("gram_integral: window shorter than one sample");
  return gram_by_index(trace, first, last);
}

void ExcitationConfig::validate() const {
  if (!(gamma_max > 0)) throw PreconditionError("excitation: gamma_max must be positive");
  if (!(kappa > 1.0 / gamma_max)) throw PreconditionError("excitation: kappa must exceed 1/gamma_max");
  if (!(k_omega > 1.0)) throw PreconditionError("excitation: k_omega must exceed 1");
  if (!(rho_omega > 0.0 && rho_omega < 1.0)) {
    throw PreconditionError("excitation: rho_omega must lie in (0, 1)");
  }
  if (!(lambda_omega > 0)) throw PreconditionError("excitation: lambda_omega must be positive");
}

double excitation_threshold(const ExcitationConfig& config, double d, double window_length) {
  return config.k_omega * d /
         (config.kappa * config.gamma_max * config.rho_omega * config.lambda_omega *
          std::exp(-config.lambda_omega * window_length));
}

double decay_time(double ratio, double rate) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw PreconditionError("decay_time: ratio must lie in (0, 1]");
  if (!(rate > 0)) throw PreconditionError("decay_time: rate must be positive");
  return -std::log(ratio) / rate;
}

const char* to_string(ExcitationKind kind) {
  switch (kind) {
    case ExcitationKind::kFinite: return "finite";
    case ExcitationKind::kPersistent: return "persistent";
    case ExcitationKind::kNone: break;
  }
  return "none";
}

ExcitationReport detect_fe(const RegressorTrace& trace, double t1, double t2,
                           const ExcitationConfig& config) {
  config.validate();
  if (!(t2 > t1)) throw RangeError("detect_fe: window must satisfy t2 > t1");
  const std::size_t first = snap(trace, t1, "start");
  const std::size_t last = snap(trace, t2, "end");
  if (last <= first) throw RangeError("detect_fe: window shorter than one sample");

  ExcitationReport report;
  report.t1 = trace.t[first];
  report.t2 = trace.t[last];
  report.T = report.t2 - report.t1;
  const SymMat<double> gram = gram_by_index(trace, first, last);
  report.alpha = std::max(0.0, min_eig(gram));
  report.kind = is_exciting(gram, report.alpha) ? ExcitationKind::kFinite : ExcitationKind::kNone;
  if (report.kind == ExcitationKind::kNone) report.alpha = 0.0;
  report.d = max_normalizer(trace, first, last);
  report.alpha0 = excitation_threshold(config, report.d, report.T);
  report.meets_assumption3 = report.alpha >= report.alpha0;
  return report;
}

ExcitationReport detect_pe(const RegressorTrace& trace, double T, double stride,
                           const std::optional<ExcitationConfig>& config) {
  if (config) config->validate();
  const double h = trace.spacing();
  const auto window = static_cast<std::size_t>(std::lround(T / h));
  const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(stride / h)));
  if (window < 1 || window > trace.size() - 1) {
    throw RangeError("detect_pe: trace is shorter than the window length");
  }

  ExcitationReport report;
  report.t1 = trace.t.front();
  report.t2 = trace.t[window];
  report.T = report.t2 - report.t1;
  report.alpha = std::numeric_limits<double>::infinity();
  bool all_exciting = true;
  for (std::size_t start = 0; start + window < trace.size(); start += step) {
    const SymMat<double> gram = gram_by_index(trace, start, start + window);
    const double alpha = std::max(0.0, min_eig(gram));
    all_exciting = all_exciting && is_exciting(gram, alpha);
    report.alpha = std::min(report.alpha, alpha);
  }
  if (!all_exciting) report.alpha = 0.0;
  report.kind = all_exciting ? ExcitationKind::kPersistent : ExcitationKind::kNone;
  report.d = max_normalizer(trace, 0, trace.size() - 1);
  if (config) {
    report.alpha0 = excitation_threshold(*config, report.d, report.T);
    report.meets_assumption3 = report.alpha >= report.alpha0;
  } else {
    report.alpha0 = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

PropagationTimeline propagation_timeline(const ExcitationReport& report,
                                         const ExcitationConfig& config,
                                         const std::optional<GammaPhaseInput>& gamma) {
  config.validate();
  if (!report.meets_assumption3) {
    throw PreconditionError("propagation_timeline: excitation level below alpha0");
  }
  PropagationTimeline out;
  out.omega_fe = config.k_omega / (config.kappa * config.gamma_max);
  out.t3 = report.t2 + decay_time(config.rho_omega, config.lambda_omega);
  if (gamma) {
    if (!(gamma->gamma_t3 < config.gamma_max)) {
      throw PreconditionError("propagation_timeline: Gamma(t3) must be below Gamma_max");
    }
    const double lower = gamma->gamma_t3 / config.gamma_max;
    if (!(gamma->rho_gamma > lower && gamma->rho_gamma < 1.0)) {
      throw PreconditionError("propagation_timeline: rho_gamma must lie in (Gamma(t3)/Gamma_max, 1)");
    }
    out.has_gamma_phase = true;
    out.gamma_fe = gamma->gamma_t3 / gamma->rho_gamma;
    out.t4 = out.t3 + decay_time(gamma->rho_gamma, gamma->lambda_gamma);
  }
  return out;
}

}  // namespace tvlr
