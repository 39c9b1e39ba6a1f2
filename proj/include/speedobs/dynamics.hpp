// Copyright 2026 The speedobs Authors
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

// Plant vector fields in (q, mom) and in the transformed momenta p = T^T mom.
#pragma once

#include <utility>

#include "speedobs/geometry.hpp"
#include "speedobs/linalg.hpp"
#include "speedobs/model.hpp"

namespace speedobs {

struct StateDerivative {
  Vec q_dot;
  Vec p_dot;
};

namespace detail {

inline void check_plant_args(const MechanicalModel& model, const Vec& q,
                             const Vec& p, const Vec& u, const Vec& d,
                             const char* what) {
  require_size(q, model.n, what);
  require_size(p, model.n, what);
  require_size(u, model.m, what);
  require_size(d, model.n, what);
  require_finite(q, what);
  require_finite(p, what);
  require_finite(u, what);
  require_finite(d, what);
}

}  // namespace detail

/// Gradient in q of the kinetic energy 0.5 mom^T M^{-1}(q) mom.
inline Vec kinetic_gradient(const MechanicalModel& model, const Vec& q,
                            const Vec& mom) {
  Vec out(model.n);
  if (model.dMinv) {
    for (Eigen::Index i = 0; i < model.n; ++i) {
      out(i) = 0.5 * mom.dot(model.dMinv(q, i) * mom);
    }
  } else if (model.dT) {
    // d(T T^T) = dT T^T + T dT^T, so the quadratic form is p^T dT^T mom.
    const Vec p = model.T(q).transpose() * mom;
    for (Eigen::Index i = 0; i < model.n; ++i) {
      out(i) = p.dot(model.dT(q, i).transpose() * mom);
    }
  } else {
    constexpr double h = 1e-6;
    Vec qp = q;
    Vec qm = q;
    for (Eigen::Index i = 0; i < model.n; ++i) {
      qp(i) = q(i) + h;
      qm(i) = q(i) - h;
      out(i) = 0.5 * mom.dot((model.Minv(qp) - model.Minv(qm)) * mom) / (2.0 * h);
      qp(i) = q(i);
      qm(i) = q(i);
    }
  }
  return out;
}

/// q_dot = M^{-1} mom,
/// mom_dot = -grad_q H - diag(r) M^{-1} mom + G u + d,
/// with H = 0.5 mom^T M^{-1}(q) mom + V(q).
inline StateDerivative eval_plant_derivative(const MechanicalModel& model,
                                             const GeneralizedState& state,
                                             const Vec& u, const Vec& d) {
  detail::check_plant_args(model, state.q, state.mom, u, d,
                           "eval_plant_derivative");
  const Vec v = model.Minv(state.q) * state.mom;
  StateDerivative out;
  out.p_dot = -kinetic_gradient(model, state.q, state.mom) -
              model.gradV(state.q) -
              model.friction.coefficients().cwiseProduct(v) +
              model.G(state.q) * u + d;
  out.q_dot = v;
  return out;
}

/// q_dot = T p, p_dot = [J(q,p) - R(q)] p - T^T [grad V - G u - d].
inline StateDerivative eval_transformed_derivative(const MechanicalModel& model,
                                                   const Vec& q, const Vec& p,
                                                   const Vec& u, const Vec& d) {
  detail::check_plant_args(model, q, p, u, d, "eval_transformed_derivative");
  const Mat t = model.T(q);
  const Mat r = t.transpose() * model.friction.coefficients().asDiagonal() * t;
  StateDerivative out;
  out.q_dot = t * p;
  out.p_dot = (build_J(model, q, p) - r) * p -
              t.transpose() * (model.gradV(q) - model.G(q) * u - d);
  return out;
}

/// Total energy 0.5 mom^T M^{-1} mom + V(q).
inline double plant_energy(const MechanicalModel& model,
                           const GeneralizedState& s) {
  return 0.5 * s.mom.dot(model.Minv(s.q) * s.mom) + model.V(s.q);
}

}  // namespace speedobs
