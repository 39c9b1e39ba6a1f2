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

// Acceptance run: one PASS/FAIL line per criterion, each with its wall time
// against a fixed budget. A criterion over budget fails. Exit status is
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "support.hpp"

namespace speedobs {
namespace {

using testing::random_vec;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Structural identities.
void structural_identities(Outcome& out) {
  std::mt19937_64 rng(1);
  double reg = 0.0, y_const = 0.0;
  bool l_sym = true, stack = true;
  for (const auto& model : testing::zrs_models()) {
    const auto y = build_Y(model);
    const Mat c = model.friction.selector();
    for (const Vec& q : random_configurations(model.n, 1000, 2)) {
      const Vec z = random_vec(rng, model.n);
      const Vec ru = random_vec(rng, c.cols()).cwiseAbs();
      const Mat t = model.T(q);
      const Vec lhs = t.transpose() * Vec(c * ru).asDiagonal() * t * z;
      reg = std::max(reg, (lhs - regressor(y, z) * ru).norm());
    }
    for (const Vec& q : random_configurations(model.n, 100, 3)) {
      const auto yq = detail::Y_at(model, q);
      for (std::size_t j = 0; j < y.size(); ++j) {
        y_const = std::max(y_const, (yq[j] - y[j]).cwiseAbs().maxCoeff());
      }
    }
    const auto l = build_L(model);
    for (const Mat& lk : l.prop) l_sym = l_sym && lk == lk.transpose();
    const auto s = static_cast<Eigen::Index>(l.sol.size());
    for (Eigen::Index j = 0; j < model.n; ++j) {
      Mat st(model.n, s);
      for (Eigen::Index k = 0; k < s; ++k) {
        st.col(k) = l.sol[k].transpose() * unit(model.n, j);
      }
      stack = stack && st == -y[j];
    }
  }
  bool skew = true;
  double jbar = 0.0;
  std::vector<MechanicalModel> all = testing::zrs_models();
  all.push_back(make_spider_crane(testing::crane_lower()));
  for (const auto& model : all) {
    for (const Vec& q : random_configurations(model.n, 100, 4)) {
      const BracketTable table(model, q);
      const Vec p = random_vec(rng, model.n, 2.0);
      const Vec pb = random_vec(rng, model.n, 2.0);
      const Mat j = table.J(p);
      skew = skew && j == Mat(-j.transpose());
      jbar = std::max(jbar, (j * pb - table.Jbar(pb) * p).norm());
    }
  }
  out.detail << "regressor residual " << sci(reg) << " (<= 1e-12), Y drift " << sci(y_const)
             << " (<= 1e-10), L symmetric " << (l_sym ? "exact" : "NO")
             << ", stack identity " << (stack ? "exact" : "NO") << ", J skew "
             << (skew ? "exact" : "NO") << ", J/Jbar swap " << sci(jbar) << " (<= 1e-10)";
  out.require(reg <= 1e-12, "regressor");
  out.require(y_const <= 1e-10, "Y constancy");
  out.require(l_sym, "L symmetry");
  out.require(stack, "stack identity");
  out.require(skew, "J skew");
  out.require(jbar <= 1e-10, "Jbar identity");
}

// ---------------------------------------------------------------------------
// 2. Geometry gates.
void geometry_gates(Outcome& out) {
  const auto crane = make_spider_crane(SpiderCraneParams{});
  const auto lower = make_spider_crane(testing::crane_lower());
  const auto manip = make_planar_manipulator(ManipulatorParams{});
  const auto qs3 = random_configurations(3, 100, 5);
  const auto qs4 = random_configurations(4, 100, 6);
  const auto rep_upper = check_zrs(crane, qs3, kDefaultFdStep, 1e-6);
  const auto rep_lower = check_zrs(lower, qs3, kDefaultFdStep, 1e-6);
  double grad_crane = 0.0, grad_manip = 0.0;
  for (const Vec& q : qs3) grad_crane = std::max(grad_crane, gradQ_residual(crane, q));
  for (const Vec& q : qs4) grad_manip = std::max(grad_manip, gradQ_residual(manip, q));
  out.detail << "upper factor bracket " << sci(rep_upper.max_bracket_norm)
             << " (<= 1e-6), crane gradQ " << sci(grad_crane)
             << " (<= 1e-6), lower factor bracket " << sci(rep_lower.max_bracket_norm)
             << " (> 1e-2), manipulator gradQ " << sci(grad_manip) << " (<= 1e-6)";
  out.require(rep_upper.commuting_pass() && rep_upper.max_bracket_norm <= 1e-6,
              "upper factor commuting");
  out.require(grad_crane <= 1e-6, "crane gradQ");
  out.require(!rep_lower.commuting_pass() && rep_lower.max_bracket_norm > 1e-2,
              "lower factor rejected");
  out.require(grad_manip <= 1e-6, "manipulator gradQ");
}

// ---------------------------------------------------------------------------
// 3. Cross-representation equivalence.
void cross_representation(Outcome& out) {
  const auto model = make_spider_crane(SpiderCraneParams{});
  const Eigen::Index n = model.n;
  const auto inputs = testing::crane_inputs();
  const Vec d = testing::crane_disturbance();
  auto input = [&](double t) {
    Vec u(2);
    u << inputs[0](t), inputs[1](t);
    return u;
  };
  auto plant = [&](double t, const Vec& x) {
    const auto s = eval_plant_derivative(model, {x.head(n), x.tail(n)}, input(t), d);
    Vec o(2 * n);
    o << s.q_dot, s.p_dot;
    return o;
  };
  auto transformed = [&](double t, const Vec& x) {
    const auto s = eval_transformed_derivative(model, x.head(n), x.tail(n), input(t), d);
    Vec o(2 * n);
    o << s.q_dot, s.p_dot;
    return o;
  };
  const Vec q0 = (Vec(3) << 0.1, -0.2, 0.4).finished();
  const Vec mom0 = (Vec(3) << 0.3, 0.1, -0.2).finished();
  Vec x0(2 * n), y0(2 * n);
  x0 << q0, mom0;
  y0 << q0, model.T(q0).transpose() * mom0;
  const Vec x = testing::integrate_rk4(plant, x0, 10.0, 1e-3);
  const Vec y = testing::integrate_rk4(transformed, y0, 10.0, 1e-3);
  const double dq = (x.head(n) - y.head(n)).norm();
  const double dp = (model.T(x.head(n)).transpose() * x.tail(n) - y.tail(n)).norm();
  out.detail << "10 s spider crane: |dq| " << sci(dq) << ", |T^T mom - p| " << sci(dp)
             << " (<= 1e-6)";
  out.require(dq <= 1e-6 && dp <= 1e-6, "representations agree");
}

// ---------------------------------------------------------------------------
// 4. Adaptive observer convergence from random initializations.
void adaptive_convergence(Outcome& out) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> r_draw(0.0, 2.0);
  double worst_p = 0.0, worst_d = 0.0, worst_r = 0.0;
  std::size_t violations = 0;
  for (int k = 0; k < 5; ++k) {
    Scenario sc = testing::crane_prop1();
    sc.init.p_hat = random_vec(rng, 3, 2.0);
    sc.init.d_hat = random_vec(rng, 3, 1.0);
    sc.init.r_hat = (Vec(1) << r_draw(rng)).finished();
    const TimeSeries ts = integrate_scenario(sc, {false});
    if (ts.diverged) {
      out.require(false, "run diverged: " + ts.diagnostic);
      return;
    }
    const Metrics m = compute_metrics(ts, 1e-2, 1e-8);
    worst_p = std::max(worst_p, testing::max_after(ts, ts.err_p, 40.0));
    worst_d = std::max(worst_d, m.final_err_d);
    worst_r = std::max(worst_r, m.final_err_r);
    violations += m.lyapunov_violations;
  }
  out.detail << "5 inits: max |p~| after 40 s " << sci(worst_p) << " (<= 1e-2), V1 violations "
             << violations << " (tol 1e-8), |d~|(60) " << sci(worst_d) << ", |r~|(60) "
             << sci(worst_r) << " (< 5e-2)";
  out.require(worst_p <= 1e-2, "|p~| after 40 s");
  out.require(violations == 0, "V1 monotone");
  out.require(worst_d < 5e-2 && worst_r < 5e-2, "parameter convergence");
}

// Not a criterion: the optional pendulum potential on the same scenario.
std::string gravity_note() {
  Scenario sc = testing::crane_prop1();
  SpiderCraneParams p;
  p.gravity = 9.81;
  sc.model = p;
  const TimeSeries ts = integrate_scenario(sc, {false});
  const Metrics m = compute_metrics(ts, 1e-2, 1e-8);
  std::ostringstream os;
  os << "info  adaptive observer with gravity 9.81: max |p~| after 40 s "
     << sci(testing::max_after(ts, ts.err_p, 40.0)) << ", V1 violations "
     << m.lyapunov_violations << ", |d~|(60) " << sci(m.final_err_d) << ", |r~|(60) "
     << sci(m.final_err_r);
  return os.str();
}

// ---------------------------------------------------------------------------
// 5. Step-disturbance tracking.
void step_tracking(Outcome& out) {
  Scenario sc = testing::crane_prop1();
  sc.obs1.lambda = 2.0;
  const std::vector<double> switches{0.0, 20.0, 40.0};
  const std::vector<double> levels{0.1, 0.5, -0.2};
  std::vector<DisturbanceSchedule::Step> steps;
  for (std::size_t k = 0; k < 3; ++k) {
    steps.push_back({switches[k], (Vec(3) << levels[k], 0.2, 0.2).finished()});
  }
  sc.disturbance = DisturbanceSchedule(steps);
  const TimeSeries ts = integrate_scenario(sc, {false});
  out.require(!ts.diverged, "run diverged");
  out.detail << "lambda 2, d1 levels 0.1/0.5/-0.2 at 0/20/40 s: band entry";
  for (std::size_t s = 0; s < 3; ++s) {
    const double end = s + 1 < 3 ? switches[s + 1] : sc.t_final;
    std::optional<double> entry;
    for (std::size_t k = 0; k < ts.size() && !entry; ++k) {
      if (ts.t[k] > switches[s] && ts.t[k] < end &&
          std::abs(ts.d_hat[k](0) - levels[s]) <= 5e-2) {
        entry = ts.t[k];
      }
    }
    out.detail << ' ' << (entry ? sci(*entry) + " s" : std::string("never"));
    out.require(entry.has_value(), "band entry for level " + sci(levels[s]));
  }
  out.detail << " (+-5e-2 before next switch)";
}

// ---------------------------------------------------------------------------
// 6. Scaled observer convergence.
void scaled_convergence(Outcome& out) {
  Scenario base = testing::crane_prop2();
  Scenario perturbed = base;
  perturbed.init.p_hat = (Vec(3) << 1.0, -1.0, 0.5).finished();
  perturbed.init.d_hat = (Vec(3) << -0.5, 0.5, 0.0).finished();
  perturbed.init.r = 1.3;
  double worst_p = 0.0, max_rate = -1e300, eta_excess = -1e300, min_r = 1e300;
  for (const Scenario& sc : {base, perturbed}) {
    const TimeSeries ts = integrate_scenario(sc);
    if (ts.diverged) {
      out.require(false, "run diverged: " + ts.diagnostic);
      return;
    }
    worst_p = std::max(worst_p, testing::max_after(ts, ts.err_p, 40.0));
    for (std::size_t k = 0; k < ts.size(); ++k) {
      max_rate = std::max(max_rate, ts.lyapunov_rate[k]);
      eta_excess = std::max(eta_excess, ts.eta_norm[k] - ts.err_p[k]);
      min_r = std::min(min_r, ts.scale[k]);
    }
  }
  out.detail << "2 inits: max |p~| after 40 s " << sci(worst_p) << " (<= 1e-2), min r "
             << sci(min_r) << " (>= 1), max sampled dV2/dt " << sci(max_rate)
             << " (<= 1e-6), max |eta| - |p~| " << sci(eta_excess) << " (<= 0)";
  out.require(worst_p <= 1e-2, "|p~| after 40 s");
  out.require(min_r >= 1.0, "r >= 1");
  out.require(max_rate <= 1e-6, "dV2/dt <= 0");
  out.require(eta_excess <= 0.0, "|eta| <= |p~|");
}

// ---------------------------------------------------------------------------
// 7. Gain trend.
void gain_trend(Outcome& out) {
  const std::vector<double> lambdas{0.4, 0.8, 2.0};
  const auto res = sweep(testing::crane_prop1(), "lambda", lambdas, 1e-2, {false});
  std::vector<double> times;
  out.detail << "convergence_time(1e-2) for lambda 0.4/0.8/2.0:";
  for (const auto& r : res) {
    if (!r.metrics.convergence_time) {
      out.detail << " none";
      out.require(false, "lambda " + sci(r.value) + " never converged");
      return;
    }
    times.push_back(*r.metrics.convergence_time);
    out.detail << ' ' << sci(times.back()) << " s";
  }
  out.require(times[0] >= times[1] && times[1] >= times[2], "non-increasing");
}

// ---------------------------------------------------------------------------
// 8. Integrator order.
Vec final_state(const TimeSeries& ts) {
  const Vec obs = ts.observer_state.empty() ? Vec() : ts.observer_state.back();
  Vec z(ts.q.back().size() * 2 + obs.size());
  z << ts.q.back(), ts.mom.back(), obs;
  return z;
}

void integrator_order(Outcome& out) {
  Scenario sc = testing::crane_prop1();
  sc.t_final = 10.0;
  sc.init.p_hat = (Vec(3) << 0.5, -0.5, 1.0).finished();
  Scenario half = sc;
  half.dt = sc.dt / 2;
  const double change = (final_state(integrate_scenario(sc, {false})) -
                         final_state(integrate_scenario(half, {false})))
                            .lpNorm<Eigen::Infinity>();
  out.detail << "crane + adaptive observer, 10 s, dt 1e-3 vs 5e-4: max change "
             << sci(change) << " (<= 1e-7)";
  out.require(change <= 1e-7, "step halving");
}

// ---------------------------------------------------------------------------
// 9. Exact initialization. The error-free set is invariant for the continuous
// dynamics; RK4 keeps it up to its truncation error, which scales as dt^4.
struct ExactRun {
  double adaptive = 0.0;  // max of |p~|, |d~|, |r~|
  double scaled = 0.0;    // max of |p~|, |d~|, |eta|
  double filter = 0.0;    // scaled observer max |pbar - p_hat| + |qbar - q| + (r - 1)
  bool finished = true;
};

ExactRun exact_run(const Vec& mom0) {
  Scenario adaptive = testing::crane_prop1();
  adaptive.t_final = 10.0;
  adaptive.mom0 = mom0;
  adaptive.init.exact = true;
  Scenario scaled = testing::crane_prop2();
  scaled.t_final = 10.0;
  scaled.mom0 = mom0;
  scaled.init.exact = true;
  ExactRun res;
  const TimeSeries a = integrate_scenario(adaptive, {false});
  for (std::size_t k = 0; k < a.size(); ++k) {
    res.adaptive = std::max({res.adaptive, a.err_p[k], a.err_d[k], a.err_r[k]});
  }
  const TimeSeries b = integrate_scenario(scaled, {false});
  const Eigen::Index n = b.n;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const Vec& st = b.observer_state[k];  // [qbar, pbar, p_I, d_I, r]
    res.scaled = std::max({res.scaled, b.err_p[k], b.err_d[k], b.eta_norm[k]});
    res.filter = std::max(res.filter, (st.segment(0, n) - b.q[k]).norm() +
                                          (st.segment(n, n) - b.p_hat[k]).norm() +
                                          (st(4 * n) - 1.0));
  }
  res.finished = !a.diverged && !b.diverged;
  return res;
}

void exact_initialization(Outcome& out) {
  const ExactRun res = exact_run(Vec::Zero(3));
  out.detail << "crane scenario, 10 s, max error norm: adaptive " << sci(res.adaptive)
             << ", scaled " << sci(res.scaled) << " (<= 1e-9)";
  out.require(res.finished, "runs finished");
  out.require(res.adaptive <= 1e-9, "adaptive observer");
  out.require(res.scaled <= 1e-9, "scaled observer");
}

std::string exact_note() {
  const ExactRun rest = exact_run(Vec::Zero(3));
  const ExactRun moving = exact_run((Vec(3) << 0.2, -0.1, 0.3).finished());
  std::ostringstream os;
  os << "info  exact initialization, RK4 truncation at dt 1e-3: scaled filter gap "
     << sci(rest.filter) << "; with mom(0) = (0.2, -0.1, 0.3): adaptive "
     << sci(moving.adaptive) << ", scaled " << sci(moving.scaled);
  return os.str();
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Outcome&)> run;
};

}  // namespace
}  // namespace speedobs

int main() {
  using namespace speedobs;
  const std::vector<Criterion> criteria{
      {1, "structural identities", 1.0, structural_identities},
      {2, "geometry gates", 1.0, geometry_gates},
      {3, "cross-representation equivalence", 5.0, cross_representation},
      {4, "adaptive observer convergence", 10.0, adaptive_convergence},
      {5, "step-disturbance tracking", 10.0, step_tracking},
      {6, "scaled observer convergence", 10.0, scaled_convergence},
      {7, "monotone gain trend", 30.0, gain_trend},
      {8, "integrator order", 5.0, integrator_order},
      {9, "exact-initialization invariance", 5.0, exact_initialization},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.require(secs < c.budget_s, "over time budget");
    if (!out.pass) ++failures;
    std::printf("%s  %d %s  [%.2f s / %.0f s]  %s\n", out.pass ? "PASS" : "FAIL", c.id,
                c.name, secs, c.budget_s, out.detail.str().c_str());
    std::fflush(stdout);
  }
  for (auto note : {gravity_note, exact_note}) {
    try {
      std::printf("%s\n", note().c_str());
    } catch (const std::exception& e) {
      std::printf("info  failed: %s\n", e.what());
    }
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
