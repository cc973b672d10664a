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

#ifndef OPFREE_LINEARIZE_HPP
#define OPFREE_LINEARIZE_HPP

#include <random>
#include <vector>

#include "opfree/freenorm.hpp"

namespace opfree {

/// delta_x; the basepoint gives the zero molecule.
inline Molecule delta_molecule(const OperatorMetricSpace& x, PointId p) {
  if (p >= x.size()) throw InvalidInput("delta of a point outside the space");
  return Molecule::delta(p);
}

/// sum a_x x, defined when the basepoint is the zero matrix.
inline CMatrix beta_eval(const Molecule& mu, const OperatorMetricSpace& x) {
  if (!x.point(0).isZero(0.0)) throw InvalidInput("beta needs the basepoint to be the zero matrix");
  mu.check(x);
  const auto d = static_cast<Eigen::Index>(x.ambient_dim());
  CMatrix out = CMatrix::Zero(d, d);
  for (const auto& [p, a] : mu.terms()) out += a * x.point(p);
  return out;
}

/// sum a_x delta_{L(x)}; coefficients of points with a common image add.
inline Molecule lift_apply(const PointMap& l, const Molecule& mu) {
  mu.check(*l.source);
  Molecule out;
  for (const auto& [p, a] : mu.terms()) out.add(l(p), a);
  return out;
}

inline MatrixMolecule lift_apply(const PointMap& l, const MatrixMolecule& mu) {
  std::vector<Molecule> e;
  e.reserve(mu.entries().size());
  for (const auto& m : mu.entries()) e.push_back(lift_apply(l, m));
  return {mu.size(), std::move(e)};
}

struct LiftCheckOptions {
  std::size_t samples = 20;  // half scalar molecules, half elementary matrix molecules
  std::uint64_t seed = 0;
  double slack = 1e-6;         // contractivity: lower(L mu) <= Lip_n(L) upper(mu) + slack
  double witness_slack = 5e-3;  // the maximizing pair must reach Lip_n(L) - slack
  PairBudget budget{};
  BracketOptions bracket{};
};

struct LiftSample {
  MatrixMolecule molecule;
  double lower_image = 0.0;  // lower bound of ||L mu|| in the target
  double upper_source = 0.0;  // upper bound of ||mu|| in the source
  bool pass = false;
};

struct LiftReport {
  LipResult lip;
  std::vector<LiftSample> samples;
  double max_excess = 0.0;      // max of lower(L mu) - Lip_n(L) upper(mu)
  double witness_ratio = 0.0;   // lower(L E) / upper(E) at the maximizing pair
  bool contractive = false;
  bool witnessed = false;
  bool pass = false;
};

/// Checks ||L~||_n against Lip_n(L) from both sides on seeded samples:
/// random scalar molecules and elementary matrix molecules of random grid
/// pairs, plus the elementary molecule of the Lip_n-maximizing pair.
inline LiftReport lift_contractivity_check(const PointMap& l, std::size_t n, const LiftCheckOptions& opts = {}) {
  if (n == 0) throw InvalidInput("level must be at least 1");
  const auto& src = *l.source;
  const auto& tgt = *l.target;
  const PairSet sp = constraint_pairs(src, n, PairMode::full(), opts.budget);
  const PairSet tp = constraint_pairs(tgt, n, PairMode::full(), opts.budget);
  LiftReport rep;
  rep.lip = map_lip_constant(l, sp);
  const double lip = rep.lip.value;

  auto lower_in_target = [&](const MatrixMolecule& mu) {
    if (mu.empty()) return 0.0;
    DualOptions d = opts.bracket.dual;
    d.target = primal_norm_upper(mu, tgt, n, opts.bracket.primal).value;  // nothing to gain beyond it
    return dual_norm_lower(mu, tgt, tp, d).value;
  };
  auto upper_in_source = [&](const MatrixMolecule& mu) {
    return primal_norm_upper(mu, src, n, opts.bracket.primal).value;
  };

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> g;
  rep.contractive = true;
  rep.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < opts.samples; ++s) {
    MatrixMolecule mu;
    if (s % 2 == 0) {
      Molecule m;
      for (std::size_t p = 1; p < src.size(); ++p) m.add(static_cast<PointId>(p), Complex(g(rng), g(rng)));
      mu = m;
    } else {
      const auto cp = sp.pair(rng() % sp.size());
      mu = Complex(g(rng), g(rng)) * MatrixMolecule::elementary(cp.a, cp.b);
    }
    LiftSample smp;
    smp.lower_image = lower_in_target(lift_apply(l, mu));
    smp.upper_source = upper_in_source(mu);
    const double excess = smp.lower_image - lip * smp.upper_source;
    smp.pass = excess <= opts.slack;
    rep.contractive = rep.contractive && smp.pass;
    rep.max_excess = std::max(rep.max_excess, excess);
    smp.molecule = std::move(mu);
    rep.samples.push_back(std::move(smp));
  }

  if (lip > 0.0) {
    const auto cp = sp.pair(rep.lip.argmax);
    const auto e = MatrixMolecule::elementary(cp.a, cp.b);
    rep.witness_ratio = lower_in_target(lift_apply(l, e)) / upper_in_source(e);
  }
  rep.witnessed = rep.witness_ratio >= lip - opts.witness_slack;
  rep.pass = rep.contractive && rep.witnessed;
  return rep;
}

}  // namespace opfree

#endif  // OPFREE_LINEARIZE_HPP
