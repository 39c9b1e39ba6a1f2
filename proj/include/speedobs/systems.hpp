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

// Ready-made mechanical systems: constant inertia, a planar manipulator with
// one elastic joint, and the 2D spider crane.
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "speedobs/linalg.hpp"
#include "speedobs/model.hpp"

namespace speedobs {

struct ConstantInertiaParams {
  Mat mass = Mat::Identity(2, 2);
  Mat stiffness = Mat::Zero(2, 2);
  /// Defaults to zero friction with every coefficient unknown.
  Vec friction = Vec::Zero(2);
  std::vector<bool> known = {false, false};
};

struct ManipulatorParams {
  double inertia = 1.0;      // I
  double base_mass = 1.0;    // M
  double link_mass = 1.0;    // m
  double link_length = 1.0;  // ell
  double elastic_stiffness = 1.0;
  Vec friction = Vec::Zero(4);
  std::vector<bool> known = {false, false, true, true};

  double a2() const {
    return std::sqrt(base_mass * link_mass) * link_length /
           std::sqrt(link_mass + base_mass);
  }
  double a3() const { return std::sqrt(base_mass + link_mass); }
};

enum class CraneFactor { upper, lower_cholesky };

struct SpiderCraneParams {
  double ring_mass = 0.5;     // m_r [kg]
  double payload_mass = 1.0;  // m [kg]
  double cable_length = 0.5;  // L3 [m]
  // The swing plane is horizontal, so gravity does not act on theta by
  // default. A positive value adds the pendulum term m g L3 (1 - cos theta).
  double gravity = 0.0;       // g [m/s^2]
  Vec friction = (Vec(3) << 0.0, 0.0, 0.5).finished();
  std::vector<bool> known = {true, true, false};
  CraneFactor factor = CraneFactor::upper;

  double a() const { return 1.0 / std::sqrt(ring_mass + payload_mass); }
  double c() const {
    return std::sqrt((ring_mass + payload_mass) /
                     (payload_mass * cable_length * cable_length * ring_mass));
  }
  double b() const { return 1.0 / (c() * cable_length * ring_mass); }
};

using ModelSpec =
    std::variant<ConstantInertiaParams, ManipulatorParams, SpiderCraneParams>;

/// Constant inertia M with T the symmetric square root of M^{-1},
/// V(q) = 0.5 q^T K q and G = I.
inline MechanicalModel make_constant_inertia(const ConstantInertiaParams& p) {
  const Eigen::Index n = p.mass.rows();
  if (p.mass.cols() != n || p.stiffness.rows() != n || p.stiffness.cols() != n) {
    throw std::invalid_argument("constant: mass and stiffness must be n x n");
  }
  if (!p.mass.isApprox(p.mass.transpose(), 1e-14)) {
    throw std::invalid_argument("constant: mass matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(p.mass);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("constant: mass matrix is not positive definite");
  }
  if (!p.stiffness.isApprox(p.stiffness.transpose(), 1e-14) &&
      !p.stiffness.isZero()) {
    throw std::invalid_argument("constant: stiffness matrix is not symmetric");
  }
  const Mat t = eig.operatorInverseSqrt();
  const Mat tinv = eig.operatorSqrt();
  const Mat minv = t * t.transpose();
  const Mat k = p.stiffness;

  MechanicalModel model;
  model.name = "constant";
  model.n = n;
  model.m = n;
  model.Minv = [minv](const Vec&) { return minv; };
  model.V = [k](const Vec& q) { return 0.5 * q.dot(k * q); };
  model.gradV = [k](const Vec& q) -> Vec { return k * q; };
  model.G = [n](const Vec&) -> Mat { return Mat::Identity(n, n); };
  model.T = [t](const Vec&) { return t; };
  model.Tinv = [tinv](const Vec&) { return tinv; };
  model.Q = [tinv](const Vec& q) -> Vec { return tinv * q; };
  model.dT = [n](const Vec&, Eigen::Index) -> Mat { return Mat::Zero(n, n); };
  model.h_lipschitz_q = [](const Vec&, double) { return 0.0; };
  model.friction = FrictionSpec(p.friction, p.known);
  model.zrs = true;
  if (model.friction.size() != n) {
    throw std::invalid_argument("constant: friction vector must have n entries");
  }
  return model;
}

/// 4-dof planar manipulator, q1 the elastic coordinate. The factor T is the
/// lower-triangular one with integrating map Q; M^{-1} is taken as T T^T.
inline MechanicalModel make_planar_manipulator(const ManipulatorParams& p) {
  if (!(p.inertia > 0 && p.base_mass > 0 && p.link_mass > 0 &&
        p.link_length > 0)) {
    throw std::invalid_argument("manipulator: constants must be positive");
  }
  const double alpha = 1.0 / std::sqrt(p.inertia);
  const double a2 = p.a2();
  const double a3 = p.a3();
  const double ratio = std::sqrt(p.base_mass / p.link_mass);
  const double gamma = ratio / a3;
  const double ke = p.elastic_stiffness;

  MechanicalModel model;
  model.name = "manipulator";
  model.n = 4;
  model.m = 3;
  model.T = [=](const Vec& q) -> Mat {
    const double s = std::sin(q(0) + q(1));
    const double c = std::cos(q(0) + q(1));
    Mat t = Mat::Zero(4, 4);
    t(0, 0) = alpha;
    t(1, 0) = -alpha;
    t(1, 1) = 1.0 / a2;
    t(2, 1) = -gamma * s;
    t(2, 2) = 1.0 / a3;
    t(3, 1) = gamma * c;
    t(3, 3) = 1.0 / a3;
    return t;
  };
  model.Tinv = [=](const Vec& q) -> Mat {
    const double s = std::sin(q(0) + q(1));
    const double c = std::cos(q(0) + q(1));
    Mat ti = Mat::Zero(4, 4);
    ti(0, 0) = std::sqrt(p.inertia);
    ti(1, 0) = a2;
    ti(1, 1) = a2;
    ti(2, 0) = a2 * ratio * s;
    ti(2, 1) = a2 * ratio * s;
    ti(2, 2) = a3;
    ti(3, 0) = -a2 * ratio * c;
    ti(3, 1) = -a2 * ratio * c;
    ti(3, 3) = a3;
    return ti;
  };
  model.dT = [=](const Vec& q, Eigen::Index i) -> Mat {
    Mat d = Mat::Zero(4, 4);
    if (i > 1) return d;
    const double s = std::sin(q(0) + q(1));
    const double c = std::cos(q(0) + q(1));
    d(2, 1) = -gamma * c;
    d(3, 1) = -gamma * s;
    return d;
  };
  const auto factor = model.T;
  model.Minv = [factor](const Vec& q) -> Mat {
    const Mat t = factor(q);
    return t * t.transpose();
  };
  model.Q = [=](const Vec& q) -> Vec {
    const double s = std::sin(q(0) + q(1));
    const double c = std::cos(q(0) + q(1));
    Vec out(4);
    out << std::sqrt(p.inertia) * q(0), a2 * (q(0) + q(1)),
        -a2 * ratio * c + a3 * q(2), -a2 * ratio * s + a3 * q(3);
    return out;
  };
  model.V = [ke](const Vec& q) { return 0.5 * ke * q(0) * q(0); };
  model.gradV = [ke](const Vec& q) -> Vec {
    Vec g = Vec::Zero(4);
    g(0) = ke * q(0);
    return g;
  };
  model.G = [](const Vec&) -> Mat {
    Mat g = Mat::Zero(4, 3);
    g.bottomRows(3) = Mat::Identity(3, 3);
    return g;
  };
  // T^{-1}(q) - T^{-1}(qbar) is rank one with norm <= 2 a2 ratio |q - qbar|.
  model.h_lipschitz_q = [=](const Vec&, double psi) {
    return 2.0 * psi * a2 * ratio;
  };
  model.friction = FrictionSpec(p.friction, p.known);
  if (model.friction.size() != 4) {
    throw std::invalid_argument("manipulator: friction vector must have 4 entries");
  }
  model.zrs = true;
  return model;
}

/// Ring of mass m_r moving in a horizontal plane with a payload of mass m
/// hanging on a cable of length L3. q = (x, y, theta), u = (F_x, F_y).
inline MechanicalModel make_spider_crane(const SpiderCraneParams& p) {
  if (!(p.ring_mass > 0 && p.payload_mass > 0 && p.cable_length > 0)) {
    throw std::invalid_argument("spider-crane: masses and length must be positive");
  }
  if (!(p.gravity >= 0)) {
    throw std::invalid_argument("spider-crane: gravity must be non-negative");
  }
  const double mr = p.ring_mass;
  const double m = p.payload_mass;
  const double len = p.cable_length;
  const double g = p.gravity;
  const double a = p.a();
  const double b = p.b();
  const double c = p.c();

  MechanicalModel model;
  model.name = "spider-crane";
  model.n = 3;
  model.m = 2;
  model.Minv = [=](const Vec& q) -> Mat {
    const double s3 = std::sin(q(2));
    const double c3 = std::cos(q(2));
    const double den = (mr + m) * mr;
    Mat mi(3, 3);
    mi(0, 0) = (mr + m * c3 * c3) / den;
    mi(0, 1) = m * c3 * s3 / den;
    mi(0, 2) = -c3 / (len * mr);
    mi(1, 1) = (mr + m - m * c3 * c3) / den;
    mi(1, 2) = -s3 / (mr * len);
    mi(2, 2) = (mr + m) / (mr * len * len * m);
    mi(1, 0) = mi(0, 1);
    mi(2, 0) = mi(0, 2);
    mi(2, 1) = mi(1, 2);
    return mi;
  };
  model.dMinv = [=](const Vec& q, Eigen::Index i) -> Mat {
    Mat d = Mat::Zero(3, 3);
    if (i != 2) return d;
    const double s3 = std::sin(q(2));
    const double c3 = std::cos(q(2));
    const double den = (mr + m) * mr;
    d(0, 0) = -2.0 * m * c3 * s3 / den;
    d(0, 1) = m * (c3 * c3 - s3 * s3) / den;
    d(0, 2) = s3 / (len * mr);
    d(1, 1) = 2.0 * m * c3 * s3 / den;
    d(1, 2) = -c3 / (mr * len);
    d(1, 0) = d(0, 1);
    d(2, 0) = d(0, 2);
    d(2, 1) = d(1, 2);
    return d;
  };
  model.V = [=](const Vec& q) { return m * g * len * (1.0 - std::cos(q(2))); };
  model.gradV = [=](const Vec& q) -> Vec {
    return (Vec(3) << 0.0, 0.0, m * g * len * std::sin(q(2))).finished();
  };
  model.G = [](const Vec&) -> Mat {
    return (Mat(3, 2) << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0).finished();
  };
  model.friction = FrictionSpec(p.friction, p.known);
  if (model.friction.size() != 3) {
    throw std::invalid_argument("spider-crane: friction vector must have 3 entries");
  }

  if (p.factor == CraneFactor::upper) {
    model.T = [=](const Vec& q) -> Mat {
      Mat t = Mat::Zero(3, 3);
      t(0, 0) = a;
      t(1, 1) = a;
      t(0, 2) = -b * std::cos(q(2));
      t(1, 2) = -b * std::sin(q(2));
      t(2, 2) = c;
      return t;
    };
    model.Tinv = [=](const Vec& q) -> Mat {
      Mat ti = Mat::Zero(3, 3);
      ti(0, 0) = 1.0 / a;
      ti(1, 1) = 1.0 / a;
      ti(0, 2) = a * len * m * std::cos(q(2));
      ti(1, 2) = a * len * m * std::sin(q(2));
      ti(2, 2) = 1.0 / c;
      return ti;
    };
    model.dT = [=](const Vec& q, Eigen::Index i) -> Mat {
      Mat d = Mat::Zero(3, 3);
      if (i == 2) {
        d(0, 2) = b * std::sin(q(2));
        d(1, 2) = -b * std::cos(q(2));
      }
      return d;
    };
    model.Q = [=](const Vec& q) -> Vec {
      return (Vec(3) << q(0) / a + a * len * m * std::sin(q(2)),
              q(1) / a - a * len * m * std::cos(q(2)), q(2) / c)
          .finished();
    };
    // Only column 3 of T^{-1} varies, along a circle of radius a L3 m.
    model.h_lipschitz_q = [=](const Vec&, double psi) {
      return psi * a * len * m;
    };
    model.zrs = true;
  } else {
    model.name = "spider-crane(lower-cholesky)";
    const auto minv = model.Minv;
    model.T = [minv](const Vec& q) -> Mat {
      return Eigen::LLT<Mat>(minv(q)).matrixL();
    };
    model.Tinv = [minv](const Vec& q) -> Mat {
      const Mat l = Eigen::LLT<Mat>(minv(q)).matrixL();
      return l.triangularView<Eigen::Lower>().solve(Mat::Identity(3, 3));
    };
    model.zrs = false;
  }
  return model;
}

inline MechanicalModel make_model(const ModelSpec& spec) {
  return std::visit(
      [](const auto& p) -> MechanicalModel {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantInertiaParams>) {
          return make_constant_inertia(p);
        } else if constexpr (std::is_same_v<P, ManipulatorParams>) {
          return make_planar_manipulator(p);
        } else {
          return make_spider_crane(p);
        }
      },
      spec);
}

/// Uniform random configurations in [-half_width, half_width]^n.
inline std::vector<Vec> random_configurations(Eigen::Index n, std::size_t count,
                                              unsigned seed,
                                              double half_width = std::numbers::pi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-half_width, half_width);
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vec q(n);
    for (Eigen::Index i = 0; i < n; ++i) q(i) = dist(rng);
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace speedobs
