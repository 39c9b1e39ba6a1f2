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

// Immersion-and-invariance momenta observer for systems whose factor T has
// commuting columns. Besides the momenta it adapts a constant disturbance d
// and the friction coefficients sitting in q-independent rows of T.
//
// Estimates are integral + proportional terms:
//   p_hat = p_I + lambda Q(q)
//   r_hat = r_uI - (1 / 2 lambda) col(p_hat^T L_k p_hat)
//   d_hat = d_I + q
// which makes V1 = 0.5 (|p~|^2 + |d~|^2 + |r~|^2) satisfy
// dV1/dt = -p~^T [R(q) + lambda I] p~.
#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "speedobs/geometry.hpp"
#include "speedobs/linalg.hpp"
#include "speedobs/model.hpp"
#include "speedobs/systems.hpp"

namespace speedobs {

/// Raised when a model does not meet an observer's structural preconditions.
class AssumptionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Obs1Params {
  double lambda = 0.8;
};

struct Obs1State {
  Vec p_I;
  Vec r_uI;
  Vec d_I;
};

struct Obs1Estimates {
  Vec p_hat;
  Vec r_u_hat;
  Vec d_hat;
  Vec mom_hat;
};

struct Obs1Derivative {
  Vec p_I;
  Vec r_uI;
  Vec d_I;
};

inline constexpr std::size_t kConstancySamples = 100;
inline constexpr unsigned kConstancySeed = 20160401u;

/// L_i = T^T e_i e_i^T T for every i in 0..n-1, evaluated at q.
inline std::vector<Mat> row_outer_products(const Mat& t) {
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    out.push_back(t.row(i).transpose() * t.row(i));
  }
  return out;
}

namespace detail {

inline std::vector<Mat> Y_at(const MechanicalModel& model, const Vec& q) {
  const Mat c = model.friction.selector();
  const auto l = row_outer_products(model.T(q));
  std::vector<Mat> y;
  for (Eigen::Index j = 0; j < model.n; ++j) {
    Mat yj = Mat::Zero(model.n, c.cols());
    for (Eigen::Index i = 0; i < model.n; ++i) {
      yj += l[i].col(j) * c.row(i);
    }
    y.push_back(std::move(yj));
  }
  return y;
}

}  // namespace detail

/// Constant regressor matrices Y_j = sum_i L_i e_j e_i^T C (n x s each).
/// Throws AssumptionViolation when any Y_j changes with q.
inline std::vector<Mat> build_Y(
    const MechanicalModel& model,
    const std::vector<Vec>& check_qs = {}) {
  const std::vector<Vec> qs =
      check_qs.empty()
          ? random_configurations(model.n, kConstancySamples, kConstancySeed)
          : check_qs;
  const auto y = detail::Y_at(model, Vec::Zero(model.n));
  for (const Vec& q : qs) {
    const auto yq = detail::Y_at(model, q);
    for (Eigen::Index j = 0; j < model.n; ++j) {
      const double dev = (yq[j] - y[j]).cwiseAbs().maxCoeff();
      if (y[j].size() > 0 && dev > 1e-10) {
        std::ostringstream os;
        os << "regressor matrix Y" << j + 1 << " of model '" << model.name
           << "' depends on q (deviation " << dev
           << "); a row of T carrying unknown friction is not constant";
        throw AssumptionViolation(os.str());
      }
    }
  }
  return y;
}

struct QuadraticMatrices {
  /// L_k^prop = T^T e_{kappa_k} e_{kappa_k}^T T (symmetric, PSD, rank <= 1).
  std::vector<Mat> prop;
  /// Solutions of the stack identity [L_1^T e_j ... L_s^T e_j] = -Y_j.
  std::vector<Mat> sol;
};

inline QuadraticMatrices build_L(const MechanicalModel& model) {
  build_Y(model);  // validates constancy
  const auto l = row_outer_products(model.T(Vec::Zero(model.n)));
  QuadraticMatrices out;
  for (int row : model.friction.unknown_indices()) {
    out.prop.push_back(l[row]);
    out.sol.push_back(-l[row]);
  }
  return out;
}

/// sum_j Y_j z_j, so that R_u(q) z = regressor(Y, z) r_u.
inline Mat regressor(const std::vector<Mat>& y, const Vec& z) {
  if (y.empty()) return Mat(0, 0);
  require_size(z, static_cast<Eigen::Index>(y.size()), "regressor z");
  Mat out = Mat::Zero(y.front().rows(), y.front().cols());
  for (std::size_t j = 0; j < y.size(); ++j) out += y[j] * z(j);
  return out;
}

inline double lyap_v1(const Vec& p_err, const Vec& d_err, const Vec& r_err) {
  return 0.5 * (p_err.squaredNorm() + d_err.squaredNorm() +
                r_err.squaredNorm());
}

class AdaptiveObserver {
 public:
  /// Validates commuting columns, integrability of Q and constancy of the
  /// regressor before anything is built.
  AdaptiveObserver(MechanicalModel model, Obs1Params params)
      : model_(std::move(model)), params_(params) {
    if (!(params_.lambda > 0.0)) {
      throw std::invalid_argument("adaptive observer: lambda must be > 0");
    }
    report_ = check_zrs(
        model_, random_configurations(model_.n, kConstancySamples, kConstancySeed),
        kDefaultFdStep, 1e-6);
    if (!report_.commuting_pass() || !report_.integrability_pass()) {
      std::ostringstream os;
      os << "adaptive observer: model '" << model_.name
         << "' fails the commuting-factor check (max bracket norm "
         << report_.max_bracket_norm << ", gradQ residual "
         << report_.gradQ_residual << ", tolerance " << report_.tolerance << ")";
      throw AssumptionViolation(os.str());
    }
    if (!model_.has_Q()) {
      throw AssumptionViolation("adaptive observer: model '" + model_.name +
                                "' provides no integrating map Q");
    }
    y_ = build_Y(model_);
    l_ = build_L(model_);
    friction_ = friction_decompose(model_.friction);
  }

  const MechanicalModel& model() const { return model_; }
  const Obs1Params& params() const { return params_; }
  const std::vector<Mat>& Y() const { return y_; }
  const QuadraticMatrices& L() const { return l_; }
  const AssumptionReport& report() const { return report_; }
  Eigen::Index n() const { return model_.n; }
  Eigen::Index s() const { return model_.friction.unknown_count(); }
  Eigen::Index state_size() const { return 2 * n() + s(); }

  /// (r_uP)_k = -(1 / 2 lambda) p_hat^T L_k^prop p_hat.
  Vec proportional_r(const Vec& p_hat) const {
    Vec out(s());
    for (Eigen::Index k = 0; k < s(); ++k) {
      out(k) = -p_hat.dot(l_.prop[k] * p_hat) / (2.0 * params_.lambda);
    }
    return out;
  }

  Obs1Estimates output(const Obs1State& state, const Vec& q) const {
    Obs1Estimates e = core(state, q);
    e.mom_hat = model_.Tinv(q).transpose() * e.p_hat;
    return e;
  }

  Obs1Derivative derivative(const Obs1State& state, const Vec& q,
                            const Vec& u) const {
    require_size(u, model_.m, "adaptive observer u");
    const Obs1Estimates e = core(state, q);
    require_finite(u, "adaptive observer u");
    const double lambda = params_.lambda;
    const Mat t = model_.T(q);
    const Mat phi = regressor(y_, e.p_hat);

    Obs1Derivative d;
    d.p_I = -lambda * e.p_hat -
            t.transpose() * (model_.gradV(q) - model_.G(q) * u - e.d_hat) -
            friction_.Rk(t) * e.p_hat;
    if (s() > 0) d.p_I -= phi * e.r_u_hat;
    d.r_uI = s() > 0 ? Vec(phi.transpose() * (d.p_I + lambda * e.p_hat) / lambda)
                     : Vec(0);
    d.d_I = -t * e.p_hat;
    return d;
  }

  /// Neutral start: p_hat = 0, r_hat = 0, d_hat = 0.
  Obs1State default_state(const Vec& q0) const {
    return state_for(q0, Vec::Zero(n()), Vec::Zero(s()), Vec::Zero(n()));
  }

  /// Integral states that reproduce the requested estimates at q.
  Obs1State state_for(const Vec& q, const Vec& p_hat, const Vec& r_hat,
                      const Vec& d_hat) const {
    require_size(q, n(), "adaptive observer q");
    require_size(p_hat, n(), "adaptive observer p_hat");
    require_size(r_hat, s(), "adaptive observer r_hat");
    require_size(d_hat, n(), "adaptive observer d_hat");
    Obs1State st;
    st.p_I = p_hat - params_.lambda * model_.Q(q);
    st.r_uI = r_hat - proportional_r(p_hat);
    st.d_I = d_hat - q;
    return st;
  }

 private:
  Obs1Estimates core(const Obs1State& state, const Vec& q) const {
    require_size(q, n(), "adaptive observer q");
    require_size(state.p_I, n(), "adaptive observer p_I");
    require_size(state.r_uI, s(), "adaptive observer r_uI");
    require_size(state.d_I, n(), "adaptive observer d_I");
    require_finite(q, "adaptive observer q");
    Obs1Estimates e;
    e.p_hat = state.p_I + params_.lambda * model_.Q(q);
    e.r_u_hat = state.r_uI + proportional_r(e.p_hat);
    e.d_hat = state.d_I + q;
    return e;
  }

  MechanicalModel model_;
  Obs1Params params_;
  AssumptionReport report_;
  std::vector<Mat> y_;
  QuadraticMatrices l_;
  FrictionDecomposition friction_;
};

}  // namespace speedobs
