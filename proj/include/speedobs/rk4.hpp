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

#pragma once

#include <utility>

#include "speedobs/linalg.hpp"

namespace speedobs {

/// One classic fourth-order Runge-Kutta step of x' = f(t, x).
template <typename F>
Vec rk4_step(F&& f, double t, const Vec& x, double h) {
  const Vec k1 = f(t, x);
  const Vec k2 = f(t + 0.5 * h, Vec(x + 0.5 * h * k1));
  const Vec k3 = f(t + 0.5 * h, Vec(x + 0.5 * h * k2));
  const Vec k4 = f(t + h, Vec(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace speedobs
