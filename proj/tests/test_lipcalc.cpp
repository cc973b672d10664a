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

#include <memory>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "opfree/lipcalc.hpp"

namespace {

using opfree::CMatrix;
using opfree::Complex;
using opfree::LipFunction;
using opfree::MatrixLipFunction;
using opfree::MatrixPoint;
using opfree::OperatorMetricSpace;
using opfree::PointMap;

std::shared_ptr<const OperatorMetricSpace> unit_space() {
  return std::make_shared<OperatorMetricSpace>(std::vector<CMatrix>{
      CMatrix::Zero(2, 2), oracle::unit(2, 0, 0), oracle::unit(2, 0, 1), oracle::unit(2, 1, 0),
      oracle::unit(2, 1, 1)});
}

std::shared_ptr<const OperatorMetricSpace> random_space(std::mt19937_64& rng, std::size_t count,
                                                        Eigen::Index d) {
  std::vector<CMatrix> pts{CMatrix::Zero(d, d)};
  while (pts.size() < count) pts.push_back(oracle::random_matrix(rng, d, d));
  return std::make_shared<OperatorMetricSpace>(pts);
}

// Brute-force max ratio, independent of the pair table.
double brute_lip(const OperatorMetricSpace& x, const MatrixLipFunction& f, std::size_t n) {
  const auto grids = opfree::enumerate_matrix_points(x, n, 100000);
  const auto k = static_cast<Eigen::Index>(f.k());
  double best = 0;
  for (std::size_t i = 0; i < grids.size(); ++i)
    for (std::size_t j = 0; j < grids.size(); ++j) {
      if (i == j) continue;
      CMatrix num(n * k, n * k), den(n * x.ambient_dim(), n * x.ambient_dim());
      const auto d = static_cast<Eigen::Index>(x.ambient_dim());
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
          num.block(r * k, c * k, k, k) = f.at(grids[i].at(r, c)) - f.at(grids[j].at(r, c));
          den.block(r * d, c * d, d, d) = x.point(grids[i].at(r, c)) - x.point(grids[j].at(r, c));
        }
      const double dd = oracle::spectral_norm(den);
      if (dd > 0) best = std::max(best, oracle::spectral_norm(num) / dd);
    }
  return best;
}

TEST(LipConstant, ZeroFunction) {
  const auto x = unit_space();
  const auto pairs = opfree::constraint_pairs(*x, 1);
  EXPECT_EQ(opfree::lip_constant(MatrixLipFunction::zero(5, 2), pairs).value, 0.0);
}

TEST(LipConstant, EmptyPairsRejected) {
  const auto x = unit_space();
  opfree::PairSet empty(1, 5, false);
  EXPECT_THROW(opfree::lip_constant(MatrixLipFunction::zero(5, 1), empty), opfree::InvalidInput);
}

TEST(LipConstant, EntryFunctionOnDiagonalUnits) {
  const OperatorMetricSpace x({CMatrix::Zero(2, 2), oracle::unit(2, 0, 0), oracle::unit(2, 1, 1)});
  const LipFunction f({0.0, 1.0, 0.0});
  EXPECT_NEAR(opfree::lip_constant(f, opfree::constraint_pairs(x, 1)).value, 1.0, 1e-12);
}

TEST(LipConstant, MatchesBruteForceAndHomogeneous) {
  std::mt19937_64 rng(13);
  const auto x = random_space(rng, 3, 2);
  std::vector<CMatrix> vals{CMatrix::Zero(2, 2)};
  for (int i = 0; i < 2; ++i) vals.push_back(oracle::random_matrix(rng, 2, 2));
  const MatrixLipFunction f(2, vals);
  for (std::size_t n : {1, 2}) {
    const auto pairs = opfree::constraint_pairs(*x, n);
    const double got = opfree::lip_constant(f, pairs).value;
    EXPECT_NEAR(got, brute_lip(*x, f, n), 1e-9 * got);
    const Complex c(0.3, -2.0);
    EXPECT_NEAR(opfree::lip_constant(f.scaled(c), pairs).value, std::abs(c) * got, 1e-9 * got);
  }
}

TEST(LipConstant, SampledNeverExceedsFull) {
  std::mt19937_64 rng(17);
  const auto x = random_space(rng, 4, 2);
  const LipFunction f({0.0, Complex(1, 2), Complex(-1, 0.5), Complex(0.2, 0.1)});
  const double full = opfree::lip_constant(f, opfree::constraint_pairs(*x, 2)).value;
  const auto sampled = opfree::lip_constant(f, opfree::constraint_pairs(*x, 2, opfree::PairMode::sample(500, 1)));
  EXPECT_TRUE(sampled.sampled);
  EXPECT_LE(sampled.value, full);
}

TEST(MapLip, IdentityAndConstant) {
  const auto x = unit_space();
  for (std::size_t n : {1, 2}) {
    const auto pairs = opfree::constraint_pairs(*x, n);
    EXPECT_NEAR(opfree::map_lip_constant(PointMap::identity(x), pairs).value, 1.0, 1e-12);
    EXPECT_EQ(opfree::map_lip_constant(PointMap::to_basepoint(x, x), pairs).value, 0.0);
  }
}

TEST(MapLip, TransposeDistortion) {
  const auto x = unit_space();
  const PointMap t(x, x, {0, 1, 3, 2, 4});
  const auto d1 = opfree::map_distortion(t, 1);
  const auto d2 = opfree::map_distortion(t, 2);
  EXPECT_NEAR(d1.forward.value, 1.0, 1e-9);
  EXPECT_NEAR(d2.forward.value, 2.0, 1e-9);
  EXPECT_NEAR(d2.backward.value, 2.0, 1e-9);
  // Witness: blocks E_ji (norm 1) against zero maps to blocks E_ij (norm 2).
  const MatrixPoint swapped(2, {1, 3, 2, 4});
  EXPECT_NEAR(opfree::amplified_distance(*x, swapped, MatrixPoint::constant(2, 0)), 1.0, 1e-12);
  EXPECT_NEAR(opfree::amplified_distance(*x, t(swapped), MatrixPoint::constant(2, 0)), 2.0, 1e-12);
}

TEST(MapLip, DistortionNeedsBijection) {
  const auto x = unit_space();
  EXPECT_THROW(opfree::map_distortion(PointMap::to_basepoint(x, x), 1), opfree::InvalidInput);
}

TEST(PointMapTest, Validation) {
  const auto x = unit_space();
  EXPECT_THROW(PointMap(x, x, {1, 1, 2, 3, 4}), opfree::InvalidInput);
  EXPECT_THROW(PointMap(x, x, {0, 1, 2}), opfree::InvalidInput);
  EXPECT_THROW(PointMap(x, x, {0, 1, 2, 3, 9}), opfree::InvalidInput);
}

TEST(Sandwich, IdentityTransposeZero) {
  const auto x = unit_space();
  const auto id = opfree::lip_sandwich_check(PointMap::identity(x), 2);
  EXPECT_TRUE(id.pass);
  EXPECT_NEAR(id.lip1, 1.0, 1e-12);
  EXPECT_NEAR(id.lipn, 1.0, 1e-12);
  EXPECT_NEAR(id.bound, 4.0, 1e-12);
  const auto tr = opfree::lip_sandwich_check(PointMap(x, x, {0, 1, 3, 2, 4}), 2);
  EXPECT_TRUE(tr.pass);
  EXPECT_NEAR(tr.lipn, 2.0, 1e-9);
  const auto z = opfree::lip_sandwich_check(MatrixLipFunction::zero(5, 1), *x, 2);
  EXPECT_TRUE(z.pass);
  EXPECT_EQ(z.lipn, 0.0);
}

TEST(Sandwich, RefusesToCertifySampledData) {
  std::vector<CMatrix> pts;
  for (int i = 0; i < 7; ++i) pts.push_back(CMatrix::Constant(1, 1, double(i)));
  const OperatorMetricSpace x(pts);
  const auto r = opfree::lip_sandwich_check(MatrixLipFunction::zero(7, 1), x, 2);
  EXPECT_FALSE(r.certified);
  EXPECT_FALSE(r.pass);
}

TEST(BallViolation, ZeroUnitAndDouble) {
  std::mt19937_64 rng(19);
  const auto x = random_space(rng, 4, 2);
  const auto pairs = opfree::constraint_pairs(*x, 2);
  EXPECT_NEAR(opfree::ball_violation(MatrixLipFunction::zero(4, 1), pairs), -pairs.min_dist(), 0.0);
  const LipFunction g({0.0, Complex(1, 1), Complex(0, -2), Complex(0.5, 0)});
  const auto lip = opfree::lip_constant(g, pairs);
  const MatrixLipFunction f = MatrixLipFunction(g).scaled(1.0 / lip.value);
  EXPECT_NEAR(opfree::ball_violation(f, pairs), 0.0, 1e-12);
  const auto active = pairs.pair(lip.argmax);
  const auto single = opfree::PairSet::from_pairs(*x, 2, {{active.a, active.b}}, false);
  const double at_active = opfree::ball_violation(f.scaled(2.0), single);
  EXPECT_NEAR(at_active, active.dist, 1e-12 * std::max(1.0, active.dist));
  EXPECT_GE(opfree::ball_violation(f.scaled(2.0), pairs), at_active);
}

}  // namespace
