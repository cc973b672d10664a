// Copyright 2026 The opfree Authors
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

#include <memory>

#include "oracles.hpp"
#include "opfree/linearize.hpp"

namespace {

using opfree::CMatrix;
using opfree::Complex;
using opfree::MatrixMolecule;
using opfree::Molecule;
using opfree::OperatorMetricSpace;
using opfree::PointMap;

std::shared_ptr<const OperatorMetricSpace> path3() {
  return std::make_shared<const OperatorMetricSpace>(std::vector<CMatrix>{
      CMatrix::Constant(1, 1, 0.0), CMatrix::Constant(1, 1, 1.0), CMatrix::Constant(1, 1, 2.0)});
}

std::shared_ptr<const OperatorMetricSpace> random_space(std::mt19937_64& rng, std::size_t count, Eigen::Index d) {
  std::vector<CMatrix> pts{CMatrix::Zero(d, d)};
  while (pts.size() < count) pts.push_back(oracle::random_matrix(rng, d, d));
  return std::make_shared<const OperatorMetricSpace>(pts);
}

PointMap random_map(std::mt19937_64& rng, std::shared_ptr<const OperatorMetricSpace> a,
                    std::shared_ptr<const OperatorMetricSpace> b) {
  std::vector<opfree::PointId> assign{0};
  for (std::size_t p = 1; p < a->size(); ++p) assign.push_back(static_cast<opfree::PointId>(rng() % b->size()));
  return {a, b, assign};
}

Molecule random_molecule(std::mt19937_64& rng, std::size_t points) {
  std::normal_distribution<double> g;
  Molecule mu;
  for (opfree::PointId p = 1; p < points; ++p) mu.add(p, Complex(g(rng), g(rng)));
  return mu;
}

TEST(Delta, BasepointIsZero) {
  const auto x = path3();
  EXPECT_TRUE(opfree::delta_molecule(*x, 0).empty());
  EXPECT_EQ(opfree::delta_molecule(*x, 2), (Molecule{{2, 1.0}}));
  EXPECT_EQ(opfree::delta_molecule(*x, 1) - opfree::delta_molecule(*x, 2), (Molecule{{1, 1.0}, {2, -1.0}}));
  EXPECT_THROW(opfree::delta_molecule(*x, 3), opfree::InvalidInput);
}

TEST(Beta, LeftInverseOfDelta) {
  std::mt19937_64 rng(1);
  const auto x = random_space(rng, 5, 3);
  for (opfree::PointId p = 0; p < 5; ++p) EXPECT_EQ(opfree::beta_eval(opfree::delta_molecule(*x, p), *x), x->point(p));
  EXPECT_TRUE(opfree::beta_eval(Molecule{}, *x).isZero(0.0));
}

TEST(Beta, ContractiveOnDifferences) {
  std::mt19937_64 rng(2);
  const auto x = random_space(rng, 5, 2);
  for (opfree::PointId p = 1; p < 5; ++p)
    for (opfree::PointId q = 0; q < p; ++q) {
      const Molecule mu = opfree::delta_molecule(*x, p) - opfree::delta_molecule(*x, q);
      EXPECT_EQ(opfree::beta_eval(mu, *x), x->point(p) - x->point(q));
      EXPECT_LE(oracle::spectral_norm(x->point(p) - x->point(q)), opfree::primal_norm_upper(mu, *x, 1).value + 1e-8);
    }
}

TEST(Beta, NeedsZeroBasepoint) {
  const OperatorMetricSpace x({CMatrix::Constant(1, 1, 1.0), CMatrix::Constant(1, 1, 2.0)});
  EXPECT_THROW(opfree::beta_eval(Molecule{{1, 1.0}}, x), opfree::InvalidInput);
}

TEST(Lift, IdentityAndCollapse) {
  std::mt19937_64 rng(3);
  const auto x = random_space(rng, 4, 2), y = random_space(rng, 3, 2);
  const auto mu = random_molecule(rng, 4);
  EXPECT_EQ(opfree::lift_apply(PointMap::identity(x), mu), mu);
  EXPECT_TRUE(opfree::lift_apply(PointMap::to_basepoint(x, y), mu).empty());
}

TEST(Lift, PathFold) {
  const auto p = path3();
  const PointMap l(p, p, {0, 1, 1});
  const Molecule mu{{1, 1.0}, {2, 1.0}};
  const auto img = opfree::lift_apply(l, mu);
  EXPECT_EQ(img, (Molecule{{1, 2.0}}));
  const auto b = opfree::norm_bracket(img, *p, 1);
  EXPECT_NEAR(b.lower, 2.0, 1e-6);
  EXPECT_NEAR(b.upper, 2.0, 1e-12);
  const double lip = opfree::map_lip_constant(l, opfree::constraint_pairs(*p, 1)).value;
  EXPECT_DOUBLE_EQ(lip, 1.0);
  EXPECT_LE(b.lower, lip * opfree::primal_norm_upper(mu, *p, 1).value + 1e-6);
}

TEST(Lift, LinearAndFunctorial) {
  std::mt19937_64 rng(4);
  const auto x = random_space(rng, 5, 2), y = random_space(rng, 4, 2), z = random_space(rng, 3, 2);
  const auto f = random_map(rng, x, y), g = random_map(rng, y, z);
  const auto mu = random_molecule(rng, 5), nu = random_molecule(rng, 5);
  const Complex a(2.0, -1.0), b(0.5, 3.0);
  const auto lhs = opfree::lift_apply(f, a * mu + b * nu);
  const auto rhs = a * opfree::lift_apply(f, mu) + b * opfree::lift_apply(f, nu);
  for (opfree::PointId p = 0; p < 4; ++p) EXPECT_NEAR(std::abs(lhs.at(p) - rhs.at(p)), 0.0, 1e-14);
  // Integer coefficients, so regrouped sums are exact.
  const Molecule ints{{1, Complex(3, -1)}, {2, 7.0}, {3, Complex(-2, 5)}, {4, Complex(0, 4)}};
  EXPECT_EQ(opfree::lift_apply(g.after(f), ints), opfree::lift_apply(g, opfree::lift_apply(f, ints)));
}

TEST(Lift, MatrixMoleculeEntrywise) {
  std::mt19937_64 rng(5);
  const auto x = random_space(rng, 4, 2), y = random_space(rng, 4, 2);
  const auto f = random_map(rng, x, y);
  const opfree::MatrixPoint a(2, {1, 2, 3, 0}), b(2, {0, 0, 2, 1});
  const auto img = opfree::lift_apply(f, MatrixMolecule::elementary(a, b));
  EXPECT_EQ(img, MatrixMolecule::elementary(f(a), f(b)));
}

TEST(LiftCheck, RandomMapsAtLevelTwo) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 2; ++t) {
    const auto x = random_space(rng, 3, 2), y = random_space(rng, 3, 2);
    const auto l = random_map(rng, x, y);
    opfree::LiftCheckOptions o;
    o.samples = 6;
    o.seed = static_cast<std::uint64_t>(t);
    const auto rep = opfree::lift_contractivity_check(l, 2, o);
    EXPECT_TRUE(rep.contractive) << rep.max_excess;
    EXPECT_EQ(rep.samples.size(), 6u);
    if (rep.lip.value > 0) {
      EXPECT_TRUE(rep.witnessed) << rep.witness_ratio << " vs " << rep.lip.value;
    }
  }
}

}  // namespace
