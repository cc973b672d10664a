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

#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "opfree/matcore.hpp"

namespace {

using opfree::CMatrix;
using opfree::Complex;

TEST(SpectralNorm, Identity) { EXPECT_NEAR(opfree::spectral_norm(CMatrix::Identity(3, 3)), 1.0, 1e-14); }

TEST(SpectralNorm, RankOneNilpotent) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 2.0;
  EXPECT_NEAR(opfree::spectral_norm(m), 2.0, 1e-14);
}

TEST(SpectralNorm, MatchesLongDoubleJacobiOracle) {
  std::mt19937_64 rng(5);
  const CMatrix m = oracle::random_matrix(rng, 5, 5);
  const double want = oracle::spectral_norm(m);
  EXPECT_NEAR(opfree::spectral_norm(m), want, 1e-9 * want);
}

TEST(SpectralNorm, OracleAcrossShapesAndSizes) {
  std::mt19937_64 rng(11);
  for (auto [r, c] : {std::pair{1, 7}, {7, 1}, {3, 8}, {9, 4}, {16, 16}, {70, 70}, {80, 66}}) {
    const CMatrix m = oracle::random_matrix(rng, r, c);
    const double want = oracle::spectral_norm(m);
    EXPECT_NEAR(opfree::spectral_norm(m), want, 1e-9 * want) << r << "x" << c;
  }
}

TEST(SpectralNorm, RejectsNonFinite) {
  CMatrix m = CMatrix::Identity(2, 2);
  m(1, 0) = Complex(std::numeric_limits<double>::quiet_NaN(), 0);
  EXPECT_THROW(opfree::spectral_norm(m), opfree::InvalidInput);
  m(1, 0) = Complex(0, std::numeric_limits<double>::infinity());
  EXPECT_THROW(opfree::spectral_norm(m), opfree::InvalidInput);
}

TEST(SpectralNorm, UnitaryInvariance) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 10; ++t) {
    const CMatrix m = oracle::random_matrix(rng, 6, 6);
    const CMatrix u = oracle::random_unitary(rng, 6), v = oracle::random_unitary(rng, 6);
    const double a = opfree::spectral_norm(m), b = opfree::spectral_norm(u * m * v);
    EXPECT_NEAR(a, b, 1e-9 * a);
  }
}

TEST(SpectralNorm, DirectSumIsMax) {
  std::mt19937_64 rng(19);
  const CMatrix a = oracle::random_matrix(rng, 3, 3), b = oracle::random_matrix(rng, 4, 2, 3.0);
  CMatrix s = CMatrix::Zero(7, 5);
  s.topLeftCorner(3, 3) = a;
  s.bottomRightCorner(4, 2) = b;
  EXPECT_DOUBLE_EQ(opfree::spectral_norm(s), std::max(opfree::spectral_norm(a), opfree::spectral_norm(b)));
}

TEST(SpectralNorm, TriangleAndHomogeneity) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = oracle::random_matrix(rng, 4, 5), b = oracle::random_matrix(rng, 4, 5);
    EXPECT_LE(opfree::spectral_norm(a + b), opfree::spectral_norm(a) + opfree::spectral_norm(b) + 1e-12);
    const Complex c(-1.5, 2.0);
    EXPECT_NEAR(opfree::spectral_norm(c * a), std::abs(c) * opfree::spectral_norm(a), 1e-12 * std::abs(c) * opfree::spectral_norm(a) * 10);
  }
}

TEST(SpectralNorm, KroneckerWithIdentityIsBitIdentical) {
  std::mt19937_64 rng(29);
  const CMatrix m = oracle::random_matrix(rng, 3, 3);
  CMatrix big = CMatrix::Zero(9, 9);
  for (int i = 0; i < 3; ++i) big.block(3 * i, 3 * i, 3, 3) = m;
  EXPECT_EQ(opfree::spectral_norm(big), opfree::spectral_norm(m));
}

TEST(TopSingularPair, Diagonal) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 3.0;
  m(1, 1) = 1.0;
  const auto p = opfree::top_singular_pair(m);
  EXPECT_NEAR(p.sigma, 3.0, 1e-12);
  EXPECT_NEAR(std::abs(p.left(0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(p.right(0)), 1.0, 1e-12);
}

TEST(TopSingularPair, Nilpotent) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 2.0;
  const auto p = opfree::top_singular_pair(m);
  EXPECT_NEAR(p.sigma, 2.0, 1e-12);
  EXPECT_NEAR(std::abs(p.left(0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(p.right(1)), 1.0, 1e-12);
}

TEST(TopSingularPair, ResidualOnRandomRectangular) {
  std::mt19937_64 rng(31);
  for (auto [r, c] : {std::pair{6, 4}, {4, 6}, {20, 3}, {90, 70}}) {
    const CMatrix m = oracle::random_matrix(rng, r, c);
    const auto p = opfree::top_singular_pair(m);
    EXPECT_LE((m * p.right - p.sigma * p.left).norm(), 1e-9 * std::max(1.0, p.sigma));
    EXPECT_NEAR(p.left.norm(), 1.0, 1e-10);
    EXPECT_NEAR(p.right.norm(), 1.0, 1e-10);
    EXPECT_NEAR(p.sigma, oracle::spectral_norm(m), 1e-9 * p.sigma);
  }
}

TEST(TopSingularPair, ZeroMatrixIsDegenerate) {
  EXPECT_THROW(opfree::top_singular_pair(CMatrix::Zero(3, 2)), opfree::DegenerateInput);
}

TEST(BlockAssemble, SingleBlock) {
  std::mt19937_64 rng(37);
  const CMatrix m = oracle::random_matrix(rng, 3, 3);
  std::vector<CMatrix> blocks{m};
  EXPECT_EQ(opfree::block_assemble(blocks, 1), m);
}

TEST(BlockAssemble, MatrixUnitsGiveRankOneNormTwo) {
  std::vector<CMatrix> blocks;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) blocks.push_back(oracle::unit(2, i, j));
  const CMatrix big = opfree::block_assemble(blocks, 2);
  // Entry ((i,k),(j,l)) = [k = i][l = j].
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l)
          EXPECT_EQ(big(2 * i + k, 2 * j + l), Complex((k == i && l == j) ? 1.0 : 0.0));
  EXPECT_NEAR(opfree::spectral_norm(big), 2.0, 1e-12);
}

TEST(BlockAssemble, ZeroBlocks) {
  std::vector<CMatrix> blocks(4, CMatrix::Zero(3, 3));
  EXPECT_TRUE(opfree::block_assemble(blocks, 2).isZero(0.0));
}

TEST(BlockAssemble, RaggedRejected) {
  std::vector<CMatrix> blocks{CMatrix::Zero(2, 2), CMatrix::Zero(2, 2), CMatrix::Zero(3, 3),
                              CMatrix::Zero(2, 2)};
  EXPECT_THROW(opfree::block_assemble(blocks, 2), opfree::InvalidInput);
  EXPECT_THROW(opfree::block_assemble(blocks, 3), opfree::InvalidInput);
}

TEST(Svd, ReconstructsAndSorts) {
  std::mt19937_64 rng(41);
  for (auto [r, c] : {std::pair{5, 3}, {3, 5}, {4, 4}}) {
    const CMatrix m = oracle::random_matrix(rng, r, c);
    const auto s = opfree::svd(m);
    const CMatrix back = s.u * s.sigma.cast<Complex>().asDiagonal() * s.v.adjoint();
    EXPECT_LE((back - m).norm(), 1e-12 * m.norm());
    for (Eigen::Index i = 1; i < s.sigma.size(); ++i) EXPECT_GE(s.sigma(i - 1), s.sigma(i));
  }
}

TEST(PolarFactor, IsUnitary) {
  std::mt19937_64 rng(43);
  const CMatrix w = opfree::polar_factor(oracle::random_matrix(rng, 4, 4));
  EXPECT_LE((w.adjoint() * w - CMatrix::Identity(4, 4)).norm(), 1e-12);
}

}  // namespace
