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

#include <gtest/gtest.h>

#include "support.hpp"

namespace speedobs {
namespace {

using testing::random_vec;

TEST(LieBracket, ConstantFieldsCommute) {
  const VectorField x = [](const Vec&) { return Vec((Vec(3) << 1, 2, 3).finished()); };
  const VectorField y = [](const Vec&) { return Vec((Vec(3) << -1, 0, 4).finished()); };
  EXPECT_LE(lie_bracket(x, y, Vec::Ones(3)).norm(), 1e-12);
}

TEST(LieBracket, HandComputedPlanarFields) {
  // X = (q2, 0), Y = (0, q1): [X, Y] = dY X - dX Y = (-q1, q2).
  const VectorField x = [](const Vec& q) { return Vec((Vec(2) << q(1), 0).finished()); };
  const VectorField y = [](const Vec& q) { return Vec((Vec(2) << 0, q(0)).finished()); };
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const Vec q = random_vec(rng, 2, 3.0);
    const Vec expected = (Vec(2) << -q(0), q(1)).finished();
    EXPECT_LE((lie_bracket(x, y, q) - expected).norm(), 1e-9);
  }
}

TEST(LieBracket, Antisymmetric) {
  const VectorField x = [](const Vec& q) {
    return Vec((Vec(3) << std::sin(q(1)), q(0) * q(2), std::cos(q(0))).finished());
  };
  const VectorField y = [](const Vec& q) {
    return Vec((Vec(3) << q(2) * q(2), std::exp(0.1 * q(0)), q(1)).finished());
  };
  for (const Vec& q : random_configurations(3, 100, 3, 2.0)) {
    EXPECT_LE((lie_bracket(x, y, q) + lie_bracket(y, x, q)).norm(), 2e-9);
  }
}

TEST(LieBracket, RejectsNonPositiveStep) {
  const VectorField x = [](const Vec& q) { return q; };
  EXPECT_THROW(lie_bracket(x, x, Vec::Zero(2), 0.0), std::invalid_argument);
}

TEST(LieBracket, CraneUpperFactorColumnsCommute) {
  const auto model = make_spider_crane(SpiderCraneParams{});
  for (const Vec& q : random_configurations(3, 50, 12)) {
    const BracketTable table(model, q, /*allow_analytic=*/false);
    EXPECT_LE(table.max_norm(), 1e-6);
  }
}

TEST(CheckZrs, ConstantFactorHasNoResidual) {
  const auto model = make_constant_inertia(testing::random_constant_params(3, 3));
  const auto rep = check_zrs(model, random_configurations(3, 100, 1));
  EXPECT_LE(rep.max_bracket_norm, 1e-9);
  EXPECT_LE(rep.gradQ_residual, 1e-9);
  for (const auto& [row, res] : rep.constant_row_residual) EXPECT_LE(res, 1e-9);
  EXPECT_TRUE(rep.all_pass());
}

TEST(CheckZrs, CraneUpperFactorPasses) {
  const auto model = make_spider_crane(SpiderCraneParams{});
  const auto rep = check_zrs(model, random_configurations(3, 100, 2), 1e-5, 1e-6);
  EXPECT_TRUE(rep.commuting_pass()) << rep.max_bracket_norm;
  EXPECT_TRUE(rep.integrability_pass()) << rep.gradQ_residual;
  EXPECT_LE(rep.gradQ_residual, 1e-6);
  EXPECT_TRUE(rep.all_pass());
}

TEST(CheckZrs, CraneLowerCholeskyFails) {
  const auto model = make_spider_crane(testing::crane_lower());
  const auto rep = check_zrs(model, random_configurations(3, 100, 2), 1e-5, 1e-6);
  EXPECT_FALSE(rep.commuting_pass());
  EXPECT_GT(rep.max_bracket_norm, 1e-2);
  EXPECT_FALSE(rep.all_pass());
}

TEST(CheckZrs, ManipulatorPasses) {
  const auto model = make_planar_manipulator(ManipulatorParams{});
  const auto rep = check_zrs(model, random_configurations(4, 100, 9), 1e-5, 1e-6);
  EXPECT_TRUE(rep.all_pass()) << rep.to_text();
  EXPECT_LE(rep.gradQ_residual, 1e-6);
}

TEST(CheckZrs, VerdictMatchesResidualAgainstTolerance) {
  const auto model = make_spider_crane(testing::crane_lower());
  const auto qs = random_configurations(3, 20, 5);
  const auto rep = check_zrs(model, qs);
  const auto loose = check_zrs(model, qs, kDefaultFdStep, rep.max_bracket_norm);
  EXPECT_TRUE(loose.commuting_pass());
  const auto tight =
      check_zrs(model, qs, kDefaultFdStep, std::nextafter(rep.max_bracket_norm, 0.0));
  EXPECT_FALSE(tight.commuting_pass());
  for (const auto& p : rep.pair_norms) EXPECT_GE(p.norm, 0.0);
}

TEST(CheckZrs, ReportText) {
  const auto model = make_spider_crane(SpiderCraneParams{});
  const std::string text = check_zrs(model, random_configurations(3, 10, 1)).to_text();
  for (const char* key : {"model=spider-crane", "max_bracket_norm=",
                          "bracket_norm.1.2=", "bracket_norm.2.3=", "assumption1=pass",
                          "gradQ_residual=", "constant_row_residual.3=",
                          "assumption2=pass", "verdict=pass"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

TEST(CheckZrs, Errors) {
  const auto model = make_spider_crane(testing::crane_lower());
  EXPECT_THROW(check_zrs(model, {}), std::invalid_argument);
  EXPECT_THROW(gradQ_residual(model, Vec::Zero(3)), std::invalid_argument);
}

TEST(GradQ, ConstantAndPrintedMaps) {
  ConstantInertiaParams unit_mass;
  unit_mass.mass = Mat::Identity(3, 3);
  unit_mass.stiffness = Mat::Zero(3, 3);
  unit_mass.friction = Vec::Zero(3);
  unit_mass.known.assign(3, false);
  const auto identity = make_constant_inertia(unit_mass);
  const auto constant = make_constant_inertia(testing::random_constant_params(8, 3));
  const auto manip = make_planar_manipulator(ManipulatorParams{});
  const auto crane = make_spider_crane(SpiderCraneParams{});
  for (const Vec& q : random_configurations(3, 100, 6)) {
    EXPECT_LE(gradQ_residual(identity, q), 1e-10);
    // Central differences of a linear map only carry roundoff,
    // about eps |Q| / h = 1e-10 for |Q| ~ 10.
    EXPECT_LE(gradQ_residual(constant, q), 1e-9);
    EXPECT_LE(gradQ_residual(crane, q), 1e-6);
  }
  for (const Vec& q : random_configurations(4, 100, 6)) {
    EXPECT_LE(gradQ_residual(manip, q), 1e-6);
  }
}

TEST(GyroscopicMatrix, VanishesForCommutingFactors) {
  std::mt19937_64 rng(4);
  for (const auto& model : testing::zrs_models()) {
    for (const Vec& q : random_configurations(model.n, 30, 7)) {
      const Vec p = random_vec(rng, model.n, 2.0);
      EXPECT_LE(build_J(model, q, p).norm(), 1e-8) << model.name;
    }
  }
}

TEST(GyroscopicMatrix, SkewAndLinear) {
  const auto model = make_spider_crane(testing::crane_lower());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coef(-2, 2);
  for (const Vec& q : random_configurations(3, 100, 8)) {
    const Vec p1 = random_vec(rng, 3, 2.0);
    const Vec p2 = random_vec(rng, 3, 2.0);
    const double a = coef(rng);
    const double b = coef(rng);
    const Mat j1 = build_J(model, q, p1);
    EXPECT_EQ(j1 + j1.transpose(), Mat::Zero(3, 3));
    EXPECT_GT(j1.norm(), 1e-3);  // the check is not vacuous here
    // Quadratic form vanishes up to the rounding of the two products.
    EXPECT_LE(std::abs(p1.dot(j1 * p1)), 1e-14 * j1.norm() * p1.squaredNorm());
    const Mat lin = build_J(model, q, Vec(a * p1 + b * p2));
    EXPECT_LE((lin - a * j1 - b * build_J(model, q, p2)).norm(), 1e-10);
  }
}

TEST(GyroscopicMatrix, AnalyticAndNumericBracketsAgree) {
  // The upper crane factor ships analytic column Jacobians.
  const auto model = make_spider_crane(SpiderCraneParams{});
  for (const Vec& q : random_configurations(3, 20, 3)) {
    const BracketTable analytic(model, q, true);
    const BracketTable numeric(model, q, false);
    for (Eigen::Index j = 0; j < 3; ++j) {
      for (Eigen::Index k = 0; k < 3; ++k) {
        EXPECT_LE((analytic(j, k) - numeric(j, k)).norm(), 1e-8);
      }
    }
  }
}

TEST(Jbar, DefiningIdentity) {
  const auto model = make_spider_crane(testing::crane_lower());
  std::mt19937_64 rng(6);
  for (const Vec& q : random_configurations(3, 100, 10)) {
    const Vec p = random_vec(rng, 3, 2.0);
    const Vec pbar = random_vec(rng, 3, 2.0);
    const BracketTable table(model, q);
    EXPECT_LE((table.J(p) * pbar - table.Jbar(pbar) * p).norm(), 1e-10);
    for (Eigen::Index k = 0; k < 3; ++k) {
      EXPECT_LE((table.Jbar(pbar).col(k) - table.J(unit(3, k)) * pbar).norm(), 1e-12);
    }
  }
  EXPECT_EQ(build_Jbar(model, Vec::Ones(3), Vec::Zero(3)), Mat::Zero(3, 3));
}

TEST(Jbar, VanishesForConstantFactor) {
  const auto model = make_constant_inertia(testing::random_constant_params(2, 3));
  std::mt19937_64 rng(7);
  for (const Vec& q : random_configurations(3, 10, 2)) {
    EXPECT_LE(build_Jbar(model, q, random_vec(rng, 3)).norm(), 1e-12);
  }
}

}  // namespace
}  // namespace speedobs
