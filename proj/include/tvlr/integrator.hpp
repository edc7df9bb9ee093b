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

#ifndef TVLR_INTEGRATOR_HPP
#define TVLR_INTEGRATOR_HPP

#include <utility>

#include "tvlr/errors.hpp"
#include "tvlr/numerics.hpp"

namespace tvlr {

enum class Integrator { kRk4, kEuler };

/// One fixed step of x' = rhs(t, x). Every component of the flat state is
/// advanced on the same stage evaluations.
template <typename Rhs>
VecXd integrate_step(Rhs&& rhs, double t, const VecXd& state, double dt,
                     Integrator method = Integrator::kRk4) {
  auto eval = [&](double tau, const VecXd& x) {
    VecXd k = rhs(tau, x);
    if (!all_finite(k)) throw IntegrationError(tau, "derivative", "non-finite right-hand side");
    return k;
  };
  if (method == Integrator::kEuler) return state + dt * eval(t, state);
  const double half = 0.5 * dt;
  const VecXd k1 = eval(t, state);
  const VecXd k2 = eval(t + half, state + half * k1);
  const VecXd k3 = eval(t + half, state + half * k2);
  const VecXd k4 = eval(t + dt, state + dt * k3);
  return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace tvlr

#endif  // TVLR_INTEGRATOR_HPP
