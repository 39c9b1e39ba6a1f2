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

// Shared fixtures: canonical scenarios, random draws, example models.
#pragma once

#include <random>
#include <vector>

#include "speedobs/speedobs.hpp"

namespace speedobs::testing {

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline Mat random_spd(std::mt19937_64& rng, Eigen::Index n) {
  Mat a(n, n);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  }
  return a * a.transpose() + static_cast<double>(n) * Mat::Identity(n, n);
}

inline ConstantInertiaParams random_constant_params(unsigned seed, Eigen::Index n) {
  std::mt19937_64 rng(seed);
  ConstantInertiaParams p;
  p.mass = random_spd(rng, n);
  p.stiffness = random_spd(rng, n);
  p.friction = random_vec(rng, n).cwiseAbs();
  p.known.assign(static_cast<std::size_t>(n), false);
  return p;
}

/// The three examples that satisfy the commuting-factor assumption.
inline std::vector<MechanicalModel> zrs_models() {
  return {make_constant_inertia(random_constant_params(11, 3)),
          make_planar_manipulator(ManipulatorParams{}),
          make_spider_crane(SpiderCraneParams{})};
}

inline SpiderCraneParams crane_lower() {
  SpiderCraneParams p;
  p.factor = CraneFactor::lower_cholesky;
  return p;
}

/// Ring forces F_x = 1.535 cos t, F_y = 7.67 sin t.
inline std::vector<InputChannel> crane_inputs() {
  return {{1.535, 1.0, 0.0, Waveform::cos}, {7.67, 1.0, 0.0, Waveform::sin}};
}

inline Vec crane_disturbance() { return (Vec(3) << 0.1, 0.2, 0.2).finished(); }

/// Adaptive observer on the crane, r3 unknown, lambda = 0.8, 60 s.
inline Scenario crane_prop1() {
  Scenario sc;
  sc.model = SpiderCraneParams{};
  sc.observer = ObserverKind::prop1;
  sc.obs1.lambda = 0.8;
  sc.input = crane_inputs();
  sc.disturbance = DisturbanceSchedule(crane_disturbance());
  sc.t_final = 60.0;
  return sc;
}

/// Scaled observer on the crane with every friction coefficient known.
inline Scenario crane_prop2() {
  Scenario sc = crane_prop1();
  SpiderCraneParams p;
  p.known = {true, true, true};
  sc.model = p;
  sc.observer = ObserverKind::prop2;
  return sc;
}

inline double max_after(const TimeSeries& ts, const std::vector<double>& v,
                        double t0) {
  double m = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (ts.t[k] >= t0) m = std::max(m, v[k]);
  }
  return m;
}

/// Plain RK4 on a user-supplied field; independent of the harness.
template <class F>
Vec integrate_rk4(F&& f, Vec x, double t_final, double dt) {
  const auto steps = static_cast<long>(std::llround(t_final / dt));
  for (long k = 0; k < steps; ++k) {
    const double t = k * dt;
    const Vec k1 = f(t, x);
    const Vec k2 = f(t + dt / 2, Vec(x + dt / 2 * k1));
    const Vec k3 = f(t + dt / 2, Vec(x + dt / 2 * k2));
    const Vec k4 = f(t + dt, Vec(x + dt * k3));
    x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

}  // namespace speedobs::testing
