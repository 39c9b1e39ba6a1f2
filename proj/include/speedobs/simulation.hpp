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

// Plant + observer coupling, fixed-step integration and convergence metrics.
#pragma once

#include <cmath>
#include <future>
#include <iomanip>
#include <limits>
#include <locale>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "speedobs/adaptive_observer.hpp"
#include "speedobs/dynamics.hpp"
#include "speedobs/linalg.hpp"
#include "speedobs/model.hpp"
#include "speedobs/rk4.hpp"
#include "speedobs/scaled_observer.hpp"
#include "speedobs/systems.hpp"

namespace speedobs {

enum class ObserverKind { none, prop1, prop2 };

inline const char* to_string(ObserverKind k) {
  switch (k) {
    case ObserverKind::none: return "none";
    case ObserverKind::prop1: return "prop1";
    case ObserverKind::prop2: return "prop2";
  }
  return "none";
}

enum class Waveform { cos, sin };

/// u_i(t) = amplitude * wave(frequency * t + phase).
struct InputChannel {
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
  Waveform waveform = Waveform::cos;

  double operator()(double t) const {
    const double arg = frequency * t + phase;
    return amplitude * (waveform == Waveform::cos ? std::cos(arg) : std::sin(arg));
  }
};

/// Observer initial-condition overrides. Unset entries take the observer's
/// neutral defaults; `exact` starts every estimate at the true value.
struct ObserverInit {
  bool exact = false;
  std::optional<Vec> p_hat;  // transformed momenta p = T^T mom
  std::optional<Vec> r_hat;  // prop1 only
  std::optional<Vec> d_hat;
  std::optional<Vec> q_bar;  // prop2 only
  std::optional<Vec> p_bar;  // prop2 only
  std::optional<double> r;   // prop2 only
};

struct Scenario {
  ModelSpec model = SpiderCraneParams{};
  ObserverKind observer = ObserverKind::prop1;
  Obs1Params obs1;
  Obs2Params obs2;
  Vec q0 = Vec::Zero(3);
  Vec mom0 = Vec::Zero(3);
  ObserverInit init;
  std::vector<InputChannel> input;
  DisturbanceSchedule disturbance{Vec(Vec::Zero(3))};
  double t_final = 10.0;
  double dt = 1e-3;
  int stride = 10;
};

/// Sampled trajectories. Observer columns are empty when no observer runs.
struct TimeSeries {
  ObserverKind kind = ObserverKind::none;
  Eigen::Index n = 0;
  Eigen::Index s = 0;
  std::vector<double> t;
  std::vector<Vec> q;
  std::vector<Vec> mom;
  std::vector<Vec> observer_state;
  std::vector<Vec> p_hat;
  std::vector<Vec> mom_hat;
  std::vector<Vec> d_hat;
  std::vector<Vec> r_hat;
  std::vector<double> err_p;
  std::vector<double> err_d;
  std::vector<double> err_r;
  std::vector<double> lyapunov;
  std::vector<double> lyapunov_rate;
  std::vector<double> scale;  // r for prop2, 1 otherwise
  std::vector<double> eta_norm;
  bool diverged = false;
  std::string diagnostic;

  std::size_t size() const { return t.size(); }
  bool has_observer() const { return kind != ObserverKind::none; }

  std::vector<std::string> column_names() const {
    std::vector<std::string> names{"t"};
    auto add = [&](const std::string& base, Eigen::Index count) {
      for (Eigen::Index i = 0; i < count; ++i) {
        names.push_back(base + std::to_string(i + 1));
      }
    };
    add("q", n);
    add("mom", n);
    if (has_observer()) {
      add("mom_hat", n);
      add("d_hat", n);
      add("r_hat", s);
      for (const char* c : {"err_p", "err_d", "err_r", "V", "r"}) {
        names.emplace_back(c);
      }
    }
    return names;
  }
};

/// Header row plus one row per sample, 17 significant digits, C locale.
inline void write_csv(std::ostream& os, const TimeSeries& ts) {
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  const auto names = ts.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    os << (c ? "," : "") << names[c];
  }
  os << '\n';
  auto put = [&os](const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << v(i);
  };
  for (std::size_t k = 0; k < ts.size(); ++k) {
    os << ts.t[k];
    put(ts.q[k]);
    put(ts.mom[k]);
    if (ts.has_observer()) {
      put(ts.mom_hat[k]);
      put(ts.d_hat[k]);
      put(ts.r_hat[k]);
      os << ',' << ts.err_p[k] << ',' << ts.err_d[k] << ',' << ts.err_r[k]
         << ',' << ts.lyapunov[k] << ',' << ts.scale[k];
    }
    os << '\n';
  }
}

/// Plant and observer stacked into one ODE z' = f(t, z; d).
/// Layout: [q, mom, observer state], where the observer state is
/// prop1: [p_I, r_uI, d_I] and prop2: [qbar, pbar, p_I, d_I, r].
class CoupledSystem {
 public:
  explicit CoupledSystem(const Scenario& sc)
      : model_(make_model(sc.model)), kind_(sc.observer), input_(sc.input) {
    if (static_cast<Eigen::Index>(input_.size()) != model_.m && !input_.empty()) {
      throw std::invalid_argument("scenario: model '" + model_.name + "' has " +
                                  std::to_string(model_.m) +
                                  " inputs but the input spec lists " +
                                  std::to_string(input_.size()));
    }
    if (kind_ == ObserverKind::prop1) {
      obs1_.emplace(model_, sc.obs1);
    } else if (kind_ == ObserverKind::prop2) {
      obs2_.emplace(model_, sc.obs2);
    }
  }

  const MechanicalModel& model() const { return model_; }
  ObserverKind kind() const { return kind_; }
  Eigen::Index n() const { return model_.n; }
  Eigen::Index s() const {
    return kind_ == ObserverKind::prop1 ? obs1_->s() : 0;
  }
  Eigen::Index observer_size() const {
    switch (kind_) {
      case ObserverKind::prop1: return obs1_->state_size();
      case ObserverKind::prop2: return obs2_->state_size();
      default: return 0;
    }
  }
  Eigen::Index size() const { return 2 * n() + observer_size(); }
  const AdaptiveObserver* adaptive() const { return obs1_ ? &*obs1_ : nullptr; }
  const ScaledObserver* scaled() const { return obs2_ ? &*obs2_ : nullptr; }

  Vec input(double t) const {
    Vec u = Vec::Zero(model_.m);
    for (std::size_t i = 0; i < input_.size(); ++i) {
      u(static_cast<Eigen::Index>(i)) = input_[i](t);
    }
    return u;
  }

  Obs1State unpack1(const Vec& z) const {
    const Eigen::Index n = this->n();
    const Eigen::Index s = this->s();
    return {z.segment(2 * n, n), z.segment(3 * n, s), z.segment(3 * n + s, n)};
  }

  Obs2State unpack2(const Vec& z) const {
    const Eigen::Index n = this->n();
    Obs2State st;
    st.q_bar = z.segment(2 * n, n);
    st.p_bar = z.segment(3 * n, n);
    st.p_I = z.segment(4 * n, n);
    st.d_I = z.segment(5 * n, n);
    st.r = z(6 * n);
    return st;
  }

  Vec pack(const Vec& q, const Vec& mom, const Obs1State& st) const {
    Vec z(size());
    z << q, mom, st.p_I, st.r_uI, st.d_I;
    return z;
  }

  Vec pack(const Vec& q, const Vec& mom, const Obs2State& st) const {
    Vec z(size());
    z << q, mom, st.q_bar, st.p_bar, st.p_I, st.d_I, st.r;
    return z;
  }

  Vec initial_state(const Scenario& sc) const {
    const Eigen::Index n = this->n();
    require_size(sc.q0, n, "scenario q0");
    require_size(sc.mom0, n, "scenario mom0");
    const Vec& q0 = sc.q0;
    const Vec d0 = sc.disturbance.at(0.0);
    const Vec p0 = model_.T(q0).transpose() * sc.mom0;
    const ObserverInit& in = sc.init;
    switch (kind_) {
      case ObserverKind::none: {
        Vec z(2 * n);
        z << q0, sc.mom0;
        return z;
      }
      case ObserverKind::prop1: {
        const Vec ru = model_.friction.unknown_values();
        const Vec p_hat = in.exact ? p0 : in.p_hat.value_or(Vec::Zero(n));
        const Vec r_hat = in.exact ? ru : in.r_hat.value_or(Vec::Zero(s()));
        const Vec d_hat = in.exact ? d0 : in.d_hat.value_or(Vec::Zero(n));
        return pack(q0, sc.mom0, obs1_->state_for(q0, p_hat, r_hat, d_hat));
      }
      case ObserverKind::prop2: {
        if (in.exact) {
          return pack(q0, sc.mom0, obs2_->state_for(q0, p0, d0, q0, p0, 1.0));
        }
        const Obs2State def = obs2_->default_state(q0);
        const Vec q_bar = in.q_bar.value_or(def.q_bar);
        const Vec p_bar = in.p_bar.value_or(def.p_bar);
        const double r = in.r.value_or(1.0);
        Obs2State st = def;
        st.q_bar = q_bar;
        st.p_bar = p_bar;
        st.r = r;
        st.d_I = -q0 / (r * r);
        if (in.p_hat || in.d_hat || in.q_bar || in.p_bar || in.r) {
          const Vec p_hat = in.p_hat.value_or(
              Vec(st.p_I + build_H(model_, q_bar, p_bar, obs2_->params().psi()) * q0));
          const Vec d_hat = in.d_hat.value_or(Vec::Zero(n));
          st = obs2_->state_for(q0, p_hat, d_hat, q_bar, p_bar, r);
        }
        return pack(q0, sc.mom0, st);
      }
    }
    return {};
  }

  Vec derivative(double t, const Vec& z, const Vec& d) const {
    const Eigen::Index n = this->n();
    const Vec q = z.head(n);
    const Vec u = input(t);
    const StateDerivative plant =
        eval_plant_derivative(model_, {q, z.segment(n, n)}, u, d);
    Vec dz(z.size());
    dz.head(n) = plant.q_dot;
    dz.segment(n, n) = plant.p_dot;
    if (kind_ == ObserverKind::prop1) {
      const Obs1Derivative od = obs1_->derivative(unpack1(z), q, u);
      dz.segment(2 * n, n) = od.p_I;
      dz.segment(3 * n, s()) = od.r_uI;
      dz.segment(3 * n + s(), n) = od.d_I;
    } else if (kind_ == ObserverKind::prop2) {
      const Obs2Derivative od = obs2_->derivative(unpack2(z), q, u);
      dz.segment(2 * n, n) = od.q_bar;
      dz.segment(3 * n, n) = od.p_bar;
      dz.segment(4 * n, n) = od.p_I;
      dz.segment(5 * n, n) = od.d_I;
      dz(6 * n) = od.r;
    }
    return dz;
  }

  /// Keeps the scaling factor inside its invariant set r >= 1.
  void project(Vec& z) const {
    if (kind_ == ObserverKind::prop2 && z(6 * n()) < 1.0) z(6 * n()) = 1.0;
  }

  struct Diagnostics {
    Vec p_hat;
    Vec mom_hat;
    Vec d_hat;
    Vec r_hat;
    double err_p = 0.0;
    double err_d = 0.0;
    double err_r = 0.0;
    double lyapunov = 0.0;
    double scale = 1.0;
    double eta_norm = 0.0;
  };

  /// Estimates, error norms and the Lyapunov value at z for true d.
  Diagnostics diagnose(const Vec& z, const Vec& d) const {
    const Eigen::Index n = this->n();
    const Vec q = z.head(n);
    const Vec p = model_.T(q).transpose() * z.segment(n, n);
    Diagnostics out;
    if (kind_ == ObserverKind::prop1) {
      const Obs1Estimates e = obs1_->output(unpack1(z), q);
      const Vec p_err = e.p_hat - p;
      const Vec d_err = e.d_hat - d;
      const Vec r_err = e.r_u_hat - model_.friction.unknown_values();
      out.p_hat = e.p_hat;
      out.mom_hat = e.mom_hat;
      out.d_hat = e.d_hat;
      out.r_hat = e.r_u_hat;
      out.err_p = p_err.norm();
      out.err_d = d_err.norm();
      out.err_r = r_err.norm();
      out.lyapunov = lyap_v1(p_err, d_err, r_err);
      out.eta_norm = out.err_p;
    } else if (kind_ == ObserverKind::prop2) {
      const Obs2State st = unpack2(z);
      const Obs2Estimates e = obs2_->output(st, q);
      const Vec p_err = e.p_hat - p;
      const Vec d_err = e.d_hat - d;
      const Vec eta = p_err / st.r;
      out.p_hat = e.p_hat;
      out.mom_hat = e.mom_hat;
      out.d_hat = e.d_hat;
      out.r_hat = Vec(0);
      out.err_p = p_err.norm();
      out.err_d = d_err.norm();
      out.err_r = 0.0;
      out.scale = st.r;
      out.eta_norm = eta.norm();
      out.lyapunov = lyap_v2(eta, st.q_bar - q, st.p_bar - e.p_hat,
                             st.r - 1.0, d_err);
    }
    return out;
  }

  /// dV/dt along the coupled vector field by a central directional difference.
  double lyapunov_rate(double t, const Vec& z, const Vec& d) const {
    if (kind_ == ObserverKind::none) return 0.0;
    const Vec f = derivative(t, z, d);
    const double speed = f.norm();
    if (speed == 0.0) return 0.0;
    const double h = 1e-6 / std::max(1.0, speed);
    Vec zp = z + h * f;
    Vec zm = z - h * f;
    project(zp);
    project(zm);
    return (diagnose(zp, d).lyapunov - diagnose(zm, d).lyapunov) / (2.0 * h);
  }

 private:
  MechanicalModel model_;
  ObserverKind kind_;
  std::vector<InputChannel> input_;
  std::optional<AdaptiveObserver> obs1_;
  std::optional<ScaledObserver> obs2_;
};

inline void validate(const Scenario& sc) {
  if (!(sc.dt > 0.0) || !std::isfinite(sc.dt)) {
    throw std::invalid_argument("scenario: dt must be > 0");
  }
  if (!(sc.t_final >= sc.dt) || !std::isfinite(sc.t_final)) {
    throw std::invalid_argument("scenario: t_final must be >= dt");
  }
  if (sc.stride < 1) throw std::invalid_argument("scenario: stride must be >= 1");
  for (const auto& ch : sc.input) {
    if (!std::isfinite(ch.amplitude) || !std::isfinite(ch.frequency) ||
        !std::isfinite(ch.phase)) {
      throw std::invalid_argument("scenario: input parameters must be finite");
    }
  }
  if (sc.disturbance.empty()) {
    throw std::invalid_argument("scenario: disturbance schedule is empty");
  }
}

struct IntegrationOptions {
  /// Sample dV/dt at every recorded sample (one extra field evaluation plus
  /// two Lyapunov evaluations per sample).
  bool lyapunov_rate = true;
};

/// Fixed-step RK4 on the coupled plant + observer ODE. The disturbance is
/// held at its value at the start of each step; switch times are snapped to
/// the step grid.
inline TimeSeries integrate_scenario(const Scenario& sc,
                                     IntegrationOptions opts = {}) {
  validate(sc);
  const CoupledSystem sys(sc);
  if (sc.disturbance.dimension() != sys.n()) {
    throw std::invalid_argument("scenario: disturbance dimension " +
                                std::to_string(sc.disturbance.dimension()) +
                                " does not match n = " + std::to_string(sys.n()));
  }
  const DisturbanceSchedule schedule = sc.disturbance.aligned_to(sc.dt);
  const auto steps = static_cast<long>(std::llround(sc.t_final / sc.dt));

  TimeSeries ts;
  ts.kind = sys.kind();
  ts.n = sys.n();
  ts.s = sys.s();

  auto record = [&](double t, const Vec& z) {
    const Vec& d = schedule.at(t);
    ts.t.push_back(t);
    ts.q.push_back(z.head(sys.n()));
    ts.mom.push_back(z.segment(sys.n(), sys.n()));
    if (!ts.has_observer()) return;
    ts.observer_state.push_back(z.tail(sys.observer_size()));
    const auto diag = sys.diagnose(z, d);
    ts.p_hat.push_back(diag.p_hat);
    ts.mom_hat.push_back(diag.mom_hat);
    ts.d_hat.push_back(diag.d_hat);
    ts.r_hat.push_back(diag.r_hat);
    ts.err_p.push_back(diag.err_p);
    ts.err_d.push_back(diag.err_d);
    ts.err_r.push_back(diag.err_r);
    ts.lyapunov.push_back(diag.lyapunov);
    ts.scale.push_back(diag.scale);
    ts.eta_norm.push_back(diag.eta_norm);
    ts.lyapunov_rate.push_back(opts.lyapunov_rate ? sys.lyapunov_rate(t, z, d)
                                                  : 0.0);
  };

  Vec z = sys.initial_state(sc);
  try {
    record(0.0, z);
    for (long k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * sc.dt;
      const Vec& d = schedule.at(t);
      z = rk4_step([&](double tau, const Vec& x) { return sys.derivative(tau, x, d); },
                   t, z, sc.dt);
      sys.project(z);
      if (!z.allFinite()) {
        ts.diverged = true;
        ts.diagnostic = "non-finite state at t = " +
                        std::to_string(static_cast<double>(k + 1) * sc.dt);
        break;
      }
      if ((k + 1) % sc.stride == 0 || k + 1 == steps) {
        record(static_cast<double>(k + 1) * sc.dt, z);
      }
    }
  } catch (const std::domain_error& e) {
    ts.diverged = true;
    ts.diagnostic = e.what();
  }
  return ts;
}

struct Metrics {
  double epsilon = 1e-2;
  /// First time after which |p~| stays below epsilon; empty if never.
  std::optional<double> convergence_time;
  double final_err_p = 0.0;
  double final_err_d = 0.0;
  double final_err_r = 0.0;
  double min_scale = 1.0;
  std::size_t lyapunov_violations = 0;
  double max_lyapunov_violation = 0.0;
};

/// convergence_time of an arbitrary error series.
inline std::optional<double> convergence_time(const std::vector<double>& t,
                                              const std::vector<double>& err,
                                              double eps) {
  if (t.empty()) return std::nullopt;
  for (std::size_t k = err.size(); k-- > 0;) {
    if (!(err[k] < eps)) {
      if (k + 1 == err.size()) return std::nullopt;
      return t[k + 1];
    }
  }
  return t.front();
}

inline Metrics compute_metrics(const TimeSeries& ts, double eps = 1e-2,
                               double lyap_tol = 1e-8) {
  if (ts.size() == 0) throw std::invalid_argument("compute_metrics: empty series");
  Metrics m;
  m.epsilon = eps;
  if (!ts.has_observer()) return m;
  m.convergence_time = convergence_time(ts.t, ts.err_p, eps);
  m.final_err_p = ts.err_p.back();
  m.final_err_d = ts.err_d.back();
  m.final_err_r = ts.err_r.back();
  for (double r : ts.scale) m.min_scale = std::min(m.min_scale, r);
  for (std::size_t k = 1; k < ts.lyapunov.size(); ++k) {
    const double rise = ts.lyapunov[k] - ts.lyapunov[k - 1];
    if (rise > lyap_tol) {
      ++m.lyapunov_violations;
      m.max_lyapunov_violation = std::max(m.max_lyapunov_violation, rise);
    }
  }
  return m;
}

/// Applies a named parameter to a copy of the scenario. Recognized names:
/// lambda, psi3, q0_<i>, mom0_<i> (1-based i).
inline Scenario with_parameter(Scenario sc, const std::string& name,
                               double value) {
  auto index_of = [&](const std::string& prefix) -> std::optional<Eigen::Index> {
    if (name.rfind(prefix, 0) != 0) return std::nullopt;
    const std::string rest = name.substr(prefix.size());
    if (rest.empty() || rest.find_first_not_of("0123456789") != std::string::npos) {
      return std::nullopt;
    }
    return static_cast<Eigen::Index>(std::stol(rest)) - 1;
  };
  if (name == "lambda") {
    sc.obs1.lambda = value;
  } else if (name == "psi3") {
    sc.obs2.psi3 = value;
  } else if (auto i = index_of("q0_"); i && *i >= 0 && *i < sc.q0.size()) {
    sc.q0(*i) = value;
  } else if (auto j = index_of("mom0_"); j && *j >= 0 && *j < sc.mom0.size()) {
    sc.mom0(*j) = value;
  } else {
    throw std::invalid_argument("sweep: unknown parameter '" + name + "'");
  }
  return sc;
}

struct SweepResult {
  double value;
  TimeSeries series;
  Metrics metrics;
};

/// Independent runs per value, in the given order.
inline std::vector<SweepResult> sweep(const Scenario& sc, const std::string& param,
                                      const std::vector<double>& values,
                                      double eps = 1e-2,
                                      IntegrationOptions opts = {}) {
  std::vector<Scenario> runs;
  for (double v : values) runs.push_back(with_parameter(sc, param, v));
  std::vector<std::future<TimeSeries>> jobs;
  for (const auto& run : runs) {
    jobs.push_back(std::async(std::launch::async,
                              [&run, opts] { return integrate_scenario(run, opts); }));
  }
  std::vector<SweepResult> out;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    TimeSeries ts = jobs[k].get();
    Metrics m = compute_metrics(ts, eps);
    out.push_back({values[k], std::move(ts), m});
  }
  return out;
}

}  // namespace speedobs
