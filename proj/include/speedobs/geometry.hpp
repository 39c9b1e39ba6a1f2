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

// Lie brackets of the factor columns, the gyroscopic matrix J(q, p), its
// companion Jbar(q, pbar) and numeric checks of the structural assumptions
// on the factor T(q).
#pragma once

#include <algorithm>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "speedobs/linalg.hpp"
#include "speedobs/model.hpp"

namespace speedobs {

using VectorField = std::function<Vec(const Vec&)>;

inline constexpr double kDefaultFdStep = 1e-5;

/// Central-difference Jacobian of f at q.
inline Mat fd_jacobian(const VectorField& f, const Vec& q,
                       double h = kDefaultFdStep) {
  const Vec f0 = f(q);
  Mat jac(f0.size(), q.size());
  Vec qp = q;
  Vec qm = q;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    qp(i) = q(i) + h;
    qm(i) = q(i) - h;
    jac.col(i) = (f(qp) - f(qm)) / (2.0 * h);
    qp(i) = q(i);
    qm(i) = q(i);
  }
  return jac;
}

/// [X, Y](q) = dY(q) X(q) - dX(q) Y(q), Jacobians by central differences.
inline Vec lie_bracket(const VectorField& x, const VectorField& y, const Vec& q,
                       double h = kDefaultFdStep) {
  if (!(h > 0.0)) throw std::invalid_argument("lie_bracket: step must be > 0");
  const Vec xq = x(q);
  const Vec yq = y(q);
  require_finite(xq, "lie_bracket X");
  require_finite(yq, "lie_bracket Y");
  const Vec out = fd_jacobian(y, q, h) * xq - fd_jacobian(x, q, h) * yq;
  require_finite(out, "lie_bracket");
  return out;
}

/// Jacobian of column j of T at q; column i of the result is d(T e_j)/dq_i.
inline Mat factor_column_jacobian(const MechanicalModel& model, const Vec& q,
                                  Eigen::Index j, bool allow_analytic = true,
                                  double h = kDefaultFdStep) {
  if (allow_analytic && model.dT) {
    Mat jac(model.n, model.n);
    for (Eigen::Index i = 0; i < model.n; ++i) jac.col(i) = model.dT(q, i).col(j);
    return jac;
  }
  return fd_jacobian([&](const Vec& x) -> Vec { return model.T(x).col(j); }, q,
                     h);
}

/// All brackets [T_j, T_k] at one q, both as raw vectors and expressed in the
/// frame of the factor columns, T^{-1}(q) [T_j, T_k]. Stored for every (j, k);
/// only j < k is computed, the rest follows from antisymmetry.
class BracketTable {
 public:
  BracketTable(const MechanicalModel& model, const Vec& q,
               bool allow_analytic = true, double h = kDefaultFdStep)
      : n_(model.n),
        raw_(static_cast<std::size_t>(model.n * model.n)),
        framed_(static_cast<std::size_t>(model.n * model.n)) {
    const Mat t = model.T(q);
    const Mat tinv = model.Tinv(q);
    std::vector<Mat> jac;
    jac.reserve(static_cast<std::size_t>(n_));
    for (Eigen::Index j = 0; j < n_; ++j) {
      jac.push_back(factor_column_jacobian(model, q, j, allow_analytic, h));
    }
    for (Eigen::Index j = 0; j < n_; ++j) {
      raw_[index(j, j)] = Vec::Zero(n_);
      framed_[index(j, j)] = Vec::Zero(n_);
      for (Eigen::Index k = j + 1; k < n_; ++k) {
        Vec b = jac[k] * t.col(j) - jac[j] * t.col(k);
        Vec f = tinv * b;
        raw_[index(k, j)] = -b;
        framed_[index(k, j)] = -f;
        raw_[index(j, k)] = std::move(b);
        framed_[index(j, k)] = std::move(f);
      }
    }
  }

  Eigen::Index dimension() const { return n_; }
  /// [T_j, T_k](q).
  const Vec& operator()(Eigen::Index j, Eigen::Index k) const {
    return raw_[index(j, k)];
  }
  /// T^{-1}(q) [T_j, T_k](q).
  const Vec& framed(Eigen::Index j, Eigen::Index k) const {
    return framed_[index(j, k)];
  }

  double max_norm() const {
    double out = 0.0;
    for (const auto& b : raw_) out = std::max(out, b.norm());
    return out;
  }

  /// J_{jk}(q, p) = -p^T T^{-1}(q) [T_j, T_k]; only j < k is computed, then
  /// mirrored, so J is exactly skew-symmetric.
  Mat J(const Vec& p) const {
    Mat out = Mat::Zero(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (Eigen::Index k = j + 1; k < n_; ++k) {
        const double v = -p.dot(framed(j, k));
        out(j, k) = v;
        out(k, j) = -v;
      }
    }
    return out;
  }

  /// Column k of Jbar(q, pbar) is J(q, e_k) pbar.
  Mat Jbar(const Vec& pbar) const {
    Mat out(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (Eigen::Index k = 0; k < n_; ++k) {
        double acc = 0.0;
        for (Eigen::Index l = 0; l < n_; ++l) {
          if (l == j) continue;
          acc -= framed(j, l)(k) * pbar(l);
        }
        out(j, k) = acc;
      }
    }
    return out;
  }

 private:
  std::size_t index(Eigen::Index j, Eigen::Index k) const {
    return static_cast<std::size_t>(j * n_ + k);
  }

  Eigen::Index n_;
  std::vector<Vec> raw_;
  std::vector<Vec> framed_;
};

inline Mat build_J(const MechanicalModel& model, const Vec& q, const Vec& p) {
  require_size(q, model.n, "build_J q");
  require_size(p, model.n, "build_J p");
  return BracketTable(model, q).J(p);
}

inline Mat build_Jbar(const MechanicalModel& model, const Vec& q,
                      const Vec& pbar) {
  require_size(q, model.n, "build_Jbar q");
  require_size(pbar, model.n, "build_Jbar pbar");
  return BracketTable(model, q).Jbar(pbar);
}

/// Frobenius norm of grad Q(q) - T^{-1}(q), grad Q by central differences.
inline double gradQ_residual(const MechanicalModel& model, const Vec& q,
                             double h = kDefaultFdStep) {
  if (!model.has_Q()) {
    throw std::invalid_argument("gradQ_residual: model '" + model.name +
                                "' provides no integrating map Q");
  }
  return (fd_jacobian(model.Q, q, h) - model.Tinv(q)).norm();
}

struct BracketNorm {
  Eigen::Index i;
  Eigen::Index j;
  double norm;
};

/// Numeric verdicts on commuting factor columns, on integrability of Q and on
/// q-independence of the factor rows that carry unknown friction.
struct AssumptionReport {
  std::string model;
  std::size_t samples = 0;
  double tolerance = 0.0;
  double max_bracket_norm = 0.0;
  std::vector<BracketNorm> pair_norms;
  bool has_Q = false;
  double gradQ_residual = 0.0;
  std::vector<std::pair<int, double>> constant_row_residual;

  bool commuting_pass() const { return max_bracket_norm <= tolerance; }
  bool integrability_pass() const {
    return !has_Q || gradQ_residual <= tolerance;
  }
  bool constant_rows_pass() const {
    return std::all_of(constant_row_residual.begin(),
                       constant_row_residual.end(),
                       [&](const auto& r) { return r.second <= tolerance; });
  }
  bool all_pass() const {
    return commuting_pass() && integrability_pass() && constant_rows_pass();
  }

  /// Flat key=value text, one entry per line, 1-based indices.
  std::string to_text() const {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17);
    os << "model=" << model << '\n';
    os << "samples=" << samples << '\n';
    os << "tolerance=" << tolerance << '\n';
    os << "max_bracket_norm=" << max_bracket_norm << '\n';
    for (const auto& p : pair_norms) {
      os << "bracket_norm." << p.i + 1 << '.' << p.j + 1 << '=' << p.norm
         << '\n';
    }
    os << "assumption1=" << (commuting_pass() ? "pass" : "fail") << '\n';
    if (has_Q) {
      os << "gradQ_residual=" << gradQ_residual << '\n';
      os << "integrability=" << (integrability_pass() ? "pass" : "fail")
         << '\n';
    } else {
      os << "gradQ_residual=absent\n";
    }
    for (const auto& [row, res] : constant_row_residual) {
      os << "constant_row_residual." << row + 1 << '=' << res << '\n';
    }
    os << "assumption2=" << (constant_rows_pass() ? "pass" : "fail") << '\n';
    os << "verdict=" << (all_pass() ? "pass" : "fail") << '\n';
    return os.str();
  }
};

/// Max-over-samples residuals for every structural assumption. Brackets are
/// always taken by finite differences so the check does not trust any
/// analytic derivative the model supplies.
inline AssumptionReport check_zrs(const MechanicalModel& model,
                                  const std::vector<Vec>& sample_qs,
                                  double h = kDefaultFdStep,
                                  double tol = 1e-6) {
  if (sample_qs.empty()) {
    throw std::invalid_argument("check_zrs: empty sample set");
  }
  AssumptionReport rep;
  rep.model = model.name;
  rep.samples = sample_qs.size();
  rep.tolerance = tol;
  rep.has_Q = model.has_Q();
  for (Eigen::Index i = 0; i < model.n; ++i) {
    for (Eigen::Index j = i + 1; j < model.n; ++j) {
      rep.pair_norms.push_back({i, j, 0.0});
    }
  }
  const auto& kappa = model.friction.unknown_indices();
  for (int row : kappa) rep.constant_row_residual.emplace_back(row, 0.0);
  const Mat t0 = model.T(sample_qs.front());

  for (const Vec& q : sample_qs) {
    require_size(q, model.n, "check_zrs sample");
    const BracketTable table(model, q, /*allow_analytic=*/false, h);
    for (auto& p : rep.pair_norms) {
      p.norm = std::max(p.norm, table(p.i, p.j).norm());
      rep.max_bracket_norm = std::max(rep.max_bracket_norm, p.norm);
    }
    if (rep.has_Q) {
      rep.gradQ_residual = std::max(rep.gradQ_residual, gradQ_residual(model, q, h));
    }
    const Mat t = model.T(q);
    for (auto& [row, res] : rep.constant_row_residual) {
      res = std::max(res, (t.row(row) - t0.row(row)).cwiseAbs().maxCoeff());
    }
  }
  return rep;
}

}  // namespace speedobs
