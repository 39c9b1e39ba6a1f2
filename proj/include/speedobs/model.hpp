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

// Mechanical-system description: inertia factorization, potential, input
// matrix and the viscous friction split into known and unknown coefficients.
#pragma once

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "speedobs/linalg.hpp"

namespace speedobs {

/// Diagonal friction r = col(r_i) together with which coefficients the
/// observer is allowed to know.
class FrictionSpec {
 public:
  FrictionSpec() = default;

  FrictionSpec(Vec r, std::vector<bool> known_mask)
      : r_(std::move(r)), known_(std::move(known_mask)) {
    if (static_cast<Eigen::Index>(known_.size()) != r_.size()) {
      throw std::invalid_argument("friction: known mask length " +
                                  std::to_string(known_.size()) +
                                  " does not match coefficient count " +
                                  std::to_string(r_.size()));
    }
    require_finite(r_, "friction");
    for (Eigen::Index i = 0; i < r_.size(); ++i) {
      if (r_(i) < 0.0) {
        throw std::invalid_argument("friction: coefficient r" +
                                    std::to_string(i + 1) + " is negative");
      }
    }
    for (std::size_t i = 0; i < known_.size(); ++i) {
      if (!known_[i]) unknown_.push_back(static_cast<int>(i));
    }
  }

  /// All coefficients known, all equal to zero.
  static FrictionSpec none(Eigen::Index n) {
    return FrictionSpec(Vec::Zero(n), std::vector<bool>(n, true));
  }

  Eigen::Index size() const { return r_.size(); }
  const Vec& coefficients() const { return r_; }
  const std::vector<bool>& known_mask() const { return known_; }

  /// Zero-based indices of the unknown coefficients, in increasing order.
  const std::vector<int>& unknown_indices() const { return unknown_; }
  Eigen::Index unknown_count() const {
    return static_cast<Eigen::Index>(unknown_.size());
  }
  bool fully_known() const { return unknown_.empty(); }

  /// n x s selector with C^T r = r_u; column j is e_{kappa_j}.
  Mat selector() const {
    Mat c = Mat::Zero(size(), unknown_count());
    for (Eigen::Index j = 0; j < unknown_count(); ++j) c(unknown_[j], j) = 1.0;
    return c;
  }

  Vec unknown_values() const {
    Vec ru(unknown_count());
    for (Eigen::Index j = 0; j < unknown_count(); ++j) ru(j) = r_(unknown_[j]);
    return ru;
  }

  Vec known_values() const {
    Vec rk(size() - unknown_count());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (known_[i]) rk(k++) = r_(i);
    }
    return rk;
  }

  /// Diagonal of the known part (unknown entries zeroed).
  Vec known_diagonal() const {
    Vec d = r_;
    for (int i : unknown_) d(i) = 0.0;
    return d;
  }

  Vec unknown_diagonal() const { return r_ - known_diagonal(); }

 private:
  Vec r_;
  std::vector<bool> known_;
  std::vector<int> unknown_;
};

/// Optional Lipschitz data for H(q, p_hat) = [psi I + Jbar(q, p_hat)] T^{-1}(q)
/// in its first argument, used by the scaled observer's gain schedule.
using HLipschitzInQ = std::function<double(const Vec& p_hat, double psi)>;

/// Evaluators describing one physical system. All evaluators are pure.
struct MechanicalModel {
  std::string name;
  Eigen::Index n = 0;  // degrees of freedom
  Eigen::Index m = 0;  // inputs

  std::function<Mat(const Vec&)> Minv;
  std::function<double(const Vec&)> V;
  std::function<Vec(const Vec&)> gradV;
  std::function<Mat(const Vec&)> G;
  std::function<Mat(const Vec&)> T;
  std::function<Mat(const Vec&)> Tinv;
  /// Integrating map with grad Q = T^{-1}; empty when not available.
  std::function<Vec(const Vec&)> Q;
  /// Analytic partial derivative dT/dq_i; empty means finite differences.
  std::function<Mat(const Vec&, Eigen::Index)> dT;
  /// Analytic partial derivative dM^{-1}/dq_i; optional.
  std::function<Mat(const Vec&, Eigen::Index)> dMinv;
  HLipschitzInQ h_lipschitz_q;

  FrictionSpec friction;
  /// Claim that the factor T has commuting columns.
  bool zrs = false;

  bool has_Q() const { return static_cast<bool>(Q); }
};

struct GeneralizedState {
  Vec q;
  Vec mom;
};

/// Piecewise-constant disturbance d(t).
class DisturbanceSchedule {
 public:
  struct Step {
    double time;
    Vec d;
  };

  DisturbanceSchedule() = default;

  explicit DisturbanceSchedule(Vec constant) {
    steps_.push_back({0.0, std::move(constant)});
  }

  explicit DisturbanceSchedule(std::vector<Step> steps)
      : steps_(std::move(steps)) {
    if (steps_.empty()) {
      throw std::invalid_argument("disturbance: schedule is empty");
    }
    if (steps_.front().time != 0.0) {
      throw std::invalid_argument("disturbance: first switch time must be 0");
    }
    for (std::size_t k = 0; k < steps_.size(); ++k) {
      require_finite(steps_[k].d, "disturbance");
      if (steps_[k].d.size() != steps_.front().d.size()) {
        throw std::invalid_argument("disturbance: rows differ in dimension");
      }
      if (k > 0 && !(steps_[k].time > steps_[k - 1].time)) {
        throw std::invalid_argument(
            "disturbance: switch times must be strictly increasing");
      }
    }
  }

  const std::vector<Step>& steps() const { return steps_; }
  bool empty() const { return steps_.empty(); }
  Eigen::Index dimension() const {
    return steps_.empty() ? 0 : steps_.front().d.size();
  }

  const Vec& at(double t) const {
    auto it = std::upper_bound(
        steps_.begin(), steps_.end(), t,
        [](double value, const Step& s) { return value < s.time; });
    if (it == steps_.begin()) return steps_.front().d;
    return std::prev(it)->d;
  }

  bool is_constant() const { return steps_.size() <= 1; }

  /// Copy with every switch time moved to the nearest multiple of dt.
  DisturbanceSchedule aligned_to(double dt) const {
    std::vector<Step> out;
    for (const auto& s : steps_) {
      const double t = std::round(s.time / dt) * dt;
      if (!out.empty() && t <= out.back().time) {
        out.back().d = s.d;
      } else {
        out.push_back({t, s.d});
      }
    }
    return DisturbanceSchedule(std::move(out));
  }

 private:
  std::vector<Step> steps_;
};

/// Known/unknown friction split, with the transformed matrices
/// R_k(q) = T^T diag(r_k) T and R_u(q) = T^T diag(r_u) T.
struct FrictionDecomposition {
  Mat C;
  std::vector<int> kappa;
  Vec r_u;
  Vec r_k;
  Vec known_diagonal;
  Vec unknown_diagonal;

  Mat Rk(const Mat& t) const {
    return t.transpose() * known_diagonal.asDiagonal() * t;
  }
  Mat Ru(const Mat& t) const {
    return t.transpose() * unknown_diagonal.asDiagonal() * t;
  }
  /// R(q) is assembled as R_k + R_u so the split is exact.
  Mat R(const Mat& t) const { return Rk(t) + Ru(t); }
};

inline FrictionDecomposition friction_decompose(const FrictionSpec& spec) {
  FrictionDecomposition out;
  out.C = spec.selector();
  out.kappa = spec.unknown_indices();
  out.r_u = spec.unknown_values();
  out.r_k = spec.known_values();
  out.known_diagonal = spec.known_diagonal();
  out.unknown_diagonal = spec.unknown_diagonal();
  return out;
}

/// p = T^T(q) mom.
inline Vec momenta_transform(const MechanicalModel& model, const Vec& q,
                             const Vec& mom) {
  require_size(q, model.n, "momenta_transform q");
  require_size(mom, model.n, "momenta_transform mom");
  return model.T(q).transpose() * mom;
}

/// mom = T^{-T}(q) p.
inline Vec momenta_untransform(const MechanicalModel& model, const Vec& q,
                               const Vec& p) {
  require_size(q, model.n, "momenta_untransform q");
  require_size(p, model.n, "momenta_untransform p");
  const Mat t = model.T(q);
  const Mat tinv = model.Tinv(q);
  Eigen::JacobiSVD<Mat> svd(t);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) == 0.0 ||
      sv(0) / sv(sv.size() - 1) > 1e12) {
    throw std::domain_error("momenta_untransform: factor T is ill-conditioned");
  }
  return tinv.transpose() * p;
}

}  // namespace speedobs
