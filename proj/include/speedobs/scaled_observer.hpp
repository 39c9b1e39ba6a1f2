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

// Dynamically scaled momenta observer for general mechanical systems with
// known friction and an unknown constant disturbance.
//
// The ideal proportional term would solve grad_q p_P = H(q, p_hat) with
//   H(q, p_hat) = [psi I + Jbar(q, p_hat)] T^{-1}(q).
// It is replaced by p_P = H(qbar, pbar) q, where (qbar, pbar) are filtered
// copies of (q, p_hat). The mismatch H(q, p_hat) - H(qbar, pbar) is absorbed
// by a scaling factor r >= 1 that divides the momentum error, and the
// disturbance estimate uses d_P = q / r^2.
#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

#include "speedobs/adaptive_observer.hpp"
#include "speedobs/geometry.hpp"
#include "speedobs/linalg.hpp"
#include "speedobs/model.hpp"

namespace speedobs {

struct Obs2Params {
  double psi3 = 1.0;        // constant in psi = 4 (1 + psi3)
  double psi4_extra = 1.0;  // additive margin in psi4
  double psi5_extra = 1.0;  // additive margin in psi5

  double psi() const { return 4.0 * (1.0 + psi3); }
  /// Decay constant of the Lyapunov bound.
  double kappa() const {
    return std::min({psi3, psi4_extra, psi5_extra, psi() / 4.0});
  }
};

struct Obs2State {
  Vec q_bar;
  Vec p_bar;
  Vec p_I;
  Vec d_I;
  double r = 1.0;
};

struct Obs2Estimates {
  Vec p_hat;
  Vec d_hat;
  Vec mom_hat;
};

struct Obs2Derivative {
  Vec q_bar;
  Vec p_bar;
  Vec p_I;
  Vec d_I;
  double r = 0.0;
};

struct Obs2Gains {
  double psi;
  double psi1;
  double psi2;
  double psi3;
  double psi4;
  double psi5;
};

struct DeltaSplit {
  Mat dq;  // H(q, p_hat) - H(qbar, p_hat)
  Mat dp;  // H(qbar, p_hat) - H(qbar, pbar)
};

/// Scalars with |Delta_q| <= q |e_q| and |Delta_p| <= p |e_p|.
struct DeltaBounds {
  double q;
  double p;
};

inline Mat build_H(const MechanicalModel& model, const BracketTable& table,
                   const Vec& x, const Vec& p, double psi) {
  Mat h = table.Jbar(p);
  h.diagonal().array() += psi;
  return h * model.Tinv(x);
}

inline Mat build_H(const MechanicalModel& model, const Vec& q, const Vec& p_hat,
                   double psi) {
  if (!(psi > 0.0)) throw std::invalid_argument("build_H: psi must be > 0");
  return build_H(model, BracketTable(model, q), q, p_hat, psi);
}

inline DeltaSplit delta_split(const MechanicalModel& model, const Vec& q,
                              const Vec& q_bar, const Vec& p_hat,
                              const Vec& p_bar, double psi) {
  const Mat h_bar_hat = build_H(model, q_bar, p_hat, psi);
  return {build_H(model, q, p_hat, psi) - h_bar_hat,
          h_bar_hat - build_H(model, q_bar, p_bar, psi)};
}

namespace detail {

/// Twice the largest secant slope of q -> H(q, p_hat) over 10 points between
/// q_bar and q.
inline double numeric_q_bound(const MechanicalModel& model, const Vec& q,
                              const Vec& q_bar, const Vec& p_hat, double psi) {
  const Vec e = q - q_bar;
  const double len = e.norm();
  if (len == 0.0) return 0.0;
  const Mat h0 = build_H(model, q_bar, p_hat, psi);
  double slope = 0.0;
  for (int k = 1; k <= 10; ++k) {
    const double theta = k / 10.0;
    const Mat hk = build_H(model, Vec(q_bar + theta * e), p_hat, psi);
    slope = std::max(slope, spectral_norm(hk - h0) / (theta * len));
  }
  return 2.0 * slope;
}

/// Delta_p = -Jbar(qbar, e_p) T^{-1}(qbar) is linear in e_p; Cauchy-Schwarz
/// over the basis images gives a rigorous bound.
inline double p_bound(const MechanicalModel& model, const BracketTable& table,
                      const Vec& q_bar) {
  const Mat tinv = model.Tinv(q_bar);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < model.n; ++k) {
    const double nk = spectral_norm(table.Jbar(unit(model.n, k)) * tinv);
    acc += nk * nk;
  }
  return std::sqrt(acc);
}

}  // namespace detail

inline DeltaBounds delta_bounds(const MechanicalModel& model, const Vec& q,
                                const Vec& q_bar, const Vec& p_hat,
                                const Vec& p_bar, double psi) {
  (void)p_bar;
  DeltaBounds b;
  b.q = model.h_lipschitz_q ? model.h_lipschitz_q(p_hat, psi)
                            : detail::numeric_q_bound(model, q, q_bar, p_hat, psi);
  b.p = detail::p_bound(model, BracketTable(model, q_bar), q_bar);
  return b;
}

/// Gain schedule. norm_T = |T(q)|, norm_grad = |H(qbar, pbar)|.
inline Obs2Gains gains_from(const Obs2Params& params, double r, double norm_T,
                            double norm_grad, const DeltaBounds& bounds) {
  if (!(r >= 1.0)) {
    throw std::domain_error("scaled observer: scaling factor r = " +
                            std::to_string(r) + " fell below 1");
  }
  Obs2Gains g;
  g.psi3 = params.psi3;
  g.psi = 4.0 * (1.0 + g.psi3);
  const double r_err = r - 1.0;
  const double t2 = norm_T * norm_T;
  const double scale = r * r_err / (4.0 * (1.0 + g.psi3)) * t2;
  g.psi4 = scale * bounds.q * bounds.q + params.psi4_extra;
  g.psi5 = scale * bounds.p * bounds.p + params.psi5_extra;
  g.psi1 = 0.5 * r * r * t2 + g.psi4;
  g.psi2 = 0.5 * r * r * norm_grad * norm_grad * t2 + g.psi5;
  return g;
}

inline double lyap_v2(const Vec& eta, const Vec& e_q, const Vec& e_p,
                      double r_err, const Vec& d_err) {
  return 0.5 * (eta.squaredNorm() + e_q.squaredNorm() + e_p.squaredNorm() +
                r_err * r_err + d_err.squaredNorm());
}

class ScaledObserver {
 public:
  ScaledObserver(MechanicalModel model, Obs2Params params)
      : model_(std::move(model)), params_(params) {
    if (!(params_.psi3 > 0.0 && params_.psi4_extra > 0.0 &&
          params_.psi5_extra > 0.0)) {
      throw std::invalid_argument("scaled observer: gains must be > 0");
    }
    if (!model_.friction.fully_known()) {
      throw AssumptionViolation(
          "scaled observer: model '" + model_.name +
          "' has unknown friction coefficients; this observer needs them known");
    }
    diag_r_ = model_.friction.coefficients();
  }

  const MechanicalModel& model() const { return model_; }
  const Obs2Params& params() const { return params_; }
  Eigen::Index n() const { return model_.n; }
  Eigen::Index state_size() const { return 4 * n() + 1; }

  Obs2Estimates output(const Obs2State& st, const Vec& q) const {
    check(st, q);
    const double psi = params_.psi();
    Obs2Estimates e;
    e.p_hat = st.p_I + build_H(model_, st.q_bar, st.p_bar, psi) * q;
    e.d_hat = st.d_I + q / (st.r * st.r);
    e.mom_hat = model_.Tinv(q).transpose() * e.p_hat;
    return e;
  }

  Obs2Gains gains(const Obs2State& st, const Vec& q) const {
    check(st, q);
    const double psi = params_.psi();
    const BracketTable table_bar(model_, st.q_bar);
    const Mat h_bar = build_H(model_, table_bar, st.q_bar, st.p_bar, psi);
    const Vec p_hat = st.p_I + h_bar * q;
    DeltaBounds b;
    b.q = q_bound(q, st.q_bar, p_hat);
    b.p = detail::p_bound(model_, table_bar, st.q_bar);
    return gains_from(params_, st.r, spectral_norm(model_.T(q)),
                      spectral_norm(h_bar), b);
  }

  Obs2Derivative derivative(const Obs2State& st, const Vec& q,
                            const Vec& u) const {
    check(st, q);
    require_size(u, model_.m, "scaled observer u");
    require_finite(u, "scaled observer u");
    const double psi = params_.psi();
    // Stage values of r may sit a rounding error below the invariant set.
    const double r = std::max(st.r, 1.0);

    const BracketTable table_bar(model_, st.q_bar);
    const Mat h_bar = build_H(model_, table_bar, st.q_bar, st.p_bar, psi);
    const Vec p_hat = st.p_I + h_bar * q;
    const Vec d_hat = st.d_I + q / (r * r);

    const BracketTable table(model_, q);
    const Mat t = model_.T(q);
    const Mat tt = t.transpose();
    const Vec t_p_hat = t * p_hat;
    const Vec common = -tt * model_.gradV(q) + tt * (model_.G(q) * u) +
                       table.J(p_hat) * p_hat -
                       tt * (diag_r_.asDiagonal() * t_p_hat) + tt * d_hat;

    DeltaBounds b;
    b.q = q_bound(q, st.q_bar, p_hat);
    b.p = detail::p_bound(model_, table_bar, st.q_bar);
    const Obs2Gains g =
        gains_from(params_, r, spectral_norm(t), spectral_norm(h_bar), b);

    const Vec e_q = st.q_bar - q;
    const Vec e_p = st.p_bar - p_hat;

    Obs2Derivative d;
    d.q_bar = t_p_hat - g.psi1 * e_q;
    d.p_bar = common - g.psi2 * e_p;
    d.p_I = -h_bar_rate(st.q_bar, st.p_bar, d.q_bar, d.p_bar) * q + common -
            h_bar * t_p_hat;

    const Mat h_bar_hat = build_H(model_, table_bar, st.q_bar, p_hat, psi);
    const Mat dq = build_H(model_, table, q, p_hat, psi) - h_bar_hat;
    const Mat dp = h_bar_hat - h_bar;
    const double ndq = spectral_norm(dq * t);
    const double ndp = spectral_norm(dp * t);
    d.r = -psi / 4.0 * (r - 1.0) + r / psi * (ndp * ndp + ndq * ndq);
    d.d_I = -t_p_hat / (r * r) + (2.0 * d.r / (r * r * r)) * q;
    return d;
  }

  /// Defaults: qbar = q, pbar = 0, p_I = 0, r = 1, d_hat = 0.
  Obs2State default_state(const Vec& q0) const {
    require_size(q0, n(), "scaled observer q0");
    Obs2State st;
    st.q_bar = q0;
    st.p_bar = Vec::Zero(n());
    st.p_I = Vec::Zero(n());
    st.r = 1.0;
    st.d_I = -q0 / (st.r * st.r);
    return st;
  }

  /// Integral states reproducing p_hat and d_hat at q for the given filter
  /// states and scaling.
  Obs2State state_for(const Vec& q, const Vec& p_hat, const Vec& d_hat,
                      const Vec& q_bar, const Vec& p_bar, double r) const {
    require_size(q, n(), "scaled observer q");
    require_size(p_hat, n(), "scaled observer p_hat");
    require_size(d_hat, n(), "scaled observer d_hat");
    if (!(r >= 1.0)) throw std::invalid_argument("scaled observer: r(0) < 1");
    Obs2State st;
    st.q_bar = q_bar;
    st.p_bar = p_bar;
    st.r = r;
    st.p_I = p_hat - build_H(model_, q_bar, p_bar, params_.psi()) * q;
    st.d_I = d_hat - q / (r * r);
    return st;
  }

  /// eta = (p_hat - T^T mom) / r.
  Vec eta(const Obs2State& st, const Vec& q, const Vec& mom_true) const {
    const Obs2Estimates e = output(st, q);
    return (e.p_hat - model_.T(q).transpose() * mom_true) / st.r;
  }

 private:
  void check(const Obs2State& st, const Vec& q) const {
    require_size(q, n(), "scaled observer q");
    require_size(st.q_bar, n(), "scaled observer q_bar");
    require_size(st.p_bar, n(), "scaled observer p_bar");
    require_size(st.p_I, n(), "scaled observer p_I");
    require_size(st.d_I, n(), "scaled observer d_I");
    require_finite(q, "scaled observer q");
    if (!st.q_bar.allFinite() || !st.p_bar.allFinite() ||
        !st.p_I.allFinite() || !st.d_I.allFinite() || !std::isfinite(st.r)) {
      throw std::domain_error("scaled observer: non-finite state");
    }
  }

  double q_bound(const Vec& q, const Vec& q_bar, const Vec& p_hat) const {
    const double psi = params_.psi();
    return model_.h_lipschitz_q
               ? model_.h_lipschitz_q(p_hat, psi)
               : detail::numeric_q_bound(model_, q, q_bar, p_hat, psi);
  }

  /// d/dt H(qbar, pbar) by a central difference along (qbar_dot, pbar_dot).
  Mat h_bar_rate(const Vec& q_bar, const Vec& p_bar, const Vec& q_bar_dot,
                 const Vec& p_bar_dot) const {
    const double speed =
        std::sqrt(q_bar_dot.squaredNorm() + p_bar_dot.squaredNorm());
    if (speed == 0.0) return Mat::Zero(n(), n());
    const double h = 1e-6 / speed;
    const double psi = params_.psi();
    const Vec qp = q_bar + h * q_bar_dot;
    const Vec qm = q_bar - h * q_bar_dot;
    const Vec pp = p_bar + h * p_bar_dot;
    const Vec pm = p_bar - h * p_bar_dot;
    return (build_H(model_, qp, pp, psi) - build_H(model_, qm, pm, psi)) /
           (2.0 * h);
  }

  MechanicalModel model_;
  Obs2Params params_;
  Vec diag_r_;
};

}  // namespace speedobs
