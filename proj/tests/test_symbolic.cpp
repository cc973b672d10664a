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

#include "oracles.hpp"
#include "opfree/symbolic.hpp"

namespace {

using opfree::CMatrix;
using opfree::Complex;
using opfree::SymbolicMap;

TEST(Symbolic, EvaluatesExpressionTree) {
  std::mt19937_64 rng(1);
  const CMatrix u = oracle::random_matrix(rng, 2, 2), x = oracle::random_matrix(rng, 2, 2);
  const auto in = SymbolicMap::input(2);
  const auto f = SymbolicMap::constant(2, u) * in + Complex(0, 2) * in.adjoint() * in;
  EXPECT_LE((f(x) - (u * x + Complex(0, 2) * x.adjoint() * x)).norm(), 1e-13);
}

TEST(Symbolic, ShapeErrors) {
  const auto in = SymbolicMap::input(2);
  EXPECT_THROW(in + SymbolicMap::constant(2, CMatrix::Zero(3, 3)), opfree::InvalidInput);
  EXPECT_THROW(in * SymbolicMap::constant(2, CMatrix::Zero(3, 3)), opfree::InvalidInput);
  EXPECT_THROW(in + SymbolicMap::input(3), opfree::InvalidInput);
  EXPECT_THROW(in(CMatrix::Zero(3, 3)), opfree::InvalidInput);
}

TEST(GateauxFd, LinearMapGivesLinearPart) {
  std::mt19937_64 rng(2);
  const CMatrix u = oracle::random_matrix(rng, 2, 2);
  const auto f = SymbolicMap::constant(2, u) * SymbolicMap::input(2);
  for (int t = 0; t < 10; ++t) {
    const CMatrix x = oracle::random_matrix(rng, 2, 2, 3.0), a = oracle::random_matrix(rng, 2, 2);
    EXPECT_LE((opfree::gateaux_fd(f, x, a) - u * a).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(GateauxFd, AffineIndependentOfBasePoint) {
  std::mt19937_64 rng(3);
  const CMatrix u = oracle::random_matrix(rng, 3, 3), v = oracle::random_matrix(rng, 3, 3);
  const CMatrix c = oracle::random_matrix(rng, 3, 3);
  const auto in = SymbolicMap::input(3);
  const auto f = SymbolicMap::constant(3, u) * in * SymbolicMap::constant(3, v) + SymbolicMap::constant(3, c) +
                 Complex(0.5, 0) * in.adjoint();
  const CMatrix a = oracle::random_matrix(rng, 3, 3);
  const CMatrix want = u * a * v + 0.5 * a.adjoint();
  for (double s : {0.0, 1.0, 100.0})
    EXPECT_LE((opfree::gateaux_fd(f, s * oracle::random_matrix(rng, 3, 3), a) - want).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(GateauxFd, SquareFollowsProductRule) {
  std::mt19937_64 rng(4);
  const auto in = SymbolicMap::input(2);
  const auto f = in * in;
  for (int t = 0; t < 10; ++t) {
    const CMatrix x = oracle::random_matrix(rng, 2, 2), a = oracle::random_matrix(rng, 2, 2);
    EXPECT_LE((opfree::gateaux_fd(f, x, a) - (x * a + a * x)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(GateauxFd, ConstantIsZero) {
  std::mt19937_64 rng(5);
  const auto f = SymbolicMap::constant(2, oracle::random_matrix(rng, 2, 2));
  EXPECT_EQ(opfree::gateaux_fd(f, oracle::random_matrix(rng, 2, 2), oracle::random_matrix(rng, 2, 2)).norm(), 0.0);
}

TEST(GateauxFd, NonSettlingExtrapolationIsReported) {
  // x^7 scaled up: the truncation error at these steps is far from the
  // asymptotic regime, so the extrapolants disagree.
  auto in = SymbolicMap::input(1);
  auto f = in;
  for (int i = 0; i < 6; ++i) f = f * in;
  const CMatrix x = CMatrix::Constant(1, 1, 1.0), a = CMatrix::Constant(1, 1, 1e3);
  EXPECT_THROW(opfree::gateaux_fd(f, x, a), opfree::NumericalInstability);
}

TEST(GateauxFd, ScheduleValidation) {
  const auto f = SymbolicMap::input(1);
  const CMatrix x = CMatrix::Ones(1, 1);
  EXPECT_THROW(opfree::gateaux_fd(f, x, x, {{1e-3, 1e-3, 1e-4}}), opfree::InvalidInput);
  EXPECT_THROW(opfree::gateaux_fd(f, x, x, {{1e-3, 5e-4, 1e-4}}), opfree::InvalidInput);
}

TEST(DerivativeBound, SquareOnMesh) {
  std::mt19937_64 rng(6);
  const auto in = SymbolicMap::input(2);
  for (int t = 0; t < 3; ++t) {
    const auto rep = opfree::derivative_bound_check(in * in, oracle::random_matrix(rng, 2, 2), 2);
    EXPECT_TRUE(rep.pass) << rep.derivative_norm << " vs " << rep.lip_estimate;
    EXPECT_EQ(rep.directions, 64u + 16u);
  }
}

TEST(DerivativeBound, LinearDerivativeNormIsAmplifiedNorm) {
  // f(x) = u x: [u a_ij] = (I (x) u)[a_ij], so ||Df||_n = ||u||, attained at rank-one grids.
  std::mt19937_64 rng(7);
  const CMatrix u = oracle::random_matrix(rng, 2, 2);
  const auto f = SymbolicMap::constant(2, u) * SymbolicMap::input(2);
  const auto rep = opfree::derivative_bound_check(f, CMatrix::Zero(2, 2), 2);
  EXPECT_LE(rep.derivative_norm, oracle::spectral_norm(u) + 1e-6);
  EXPECT_LE(rep.lip_estimate, oracle::spectral_norm(u) + 1e-9);
  EXPECT_TRUE(rep.pass);
}

}  // namespace
