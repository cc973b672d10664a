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

#ifndef OPFREE_VERIFY_HPP
#define OPFREE_VERIFY_HPP

#include <chrono>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "opfree/io.hpp"
#include "opfree/linearize.hpp"
#include "opfree/maxmodel.hpp"
#include "opfree/symbolic.hpp"

namespace opfree {

/// Tolerances of the acceptance suite.
namespace verify_tol {
inline constexpr double kIsometryWidth = 5e-3;     // relative bracket width, elementary molecules
inline constexpr double kContain = 1e-9;           // slack for "bracket contains"
inline constexpr double kLp = 1e-4;                // dual vs transport, times max(1, value)
inline constexpr double kPrimalBelowLp = 1e-9;
inline constexpr double kTranspose = 1e-9;
inline constexpr double kPathWidth = 1e-4;
inline constexpr double kPathMatch = 1e-4;
inline constexpr double kTreeMismatch = 0.1;
inline constexpr double kTreeLevelOne = 1e-4;
inline constexpr double kWeakDuality = 1e-9;
inline constexpr double kPairing = 1e-8;
inline constexpr double kContractive = 1e-6;
inline constexpr double kLiftWitness = 5e-3;
inline constexpr double kLinearPart = 1e-6;
inline constexpr double kDerivative = 1e-3;
inline constexpr double kIsometrySeconds = 600.0;
}  // namespace verify_tol

struct CheckRow {
  std::string name;
  std::string expected;
  std::string got;
  double tol = 0.0;
  bool pass = false;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<CheckRow> rows;
  double seconds = 0.0;
  bool pass = false;
  std::string summary;
};

/// Every bracket produced by the suite, for the weak-duality criterion.
struct BracketLog {
  struct Entry {
    std::string name;
    double lower;
    double upper;
  };
  std::vector<Entry> entries;
  void add(std::string name, double lower, double upper) { entries.push_back({std::move(name), lower, upper}); }
};

struct VerifyConfig {
  std::uint64_t seed = 0;
  std::vector<int> only;  // criterion ids to run; empty runs all
};

inline std::shared_ptr<const OperatorMetricSpace> random_space(std::mt19937_64& rng, std::size_t points,
                                                               Eigen::Index d, bool zero_basepoint = true) {
  std::normal_distribution<double> g;
  std::vector<CMatrix> pts;
  while (pts.size() < points) {
    CMatrix m(d, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = Complex(g(rng), g(rng));
    if (pts.empty() && zero_basepoint) m.setZero();
    pts.push_back(std::move(m));
  }
  return std::make_shared<const OperatorMetricSpace>(std::move(pts));
}

namespace detail {

inline CriterionResult criterion(int id, std::string title) {
  CriterionResult c;
  c.id = id;
  c.title = std::move(title);
  return c;
}

class Suite {
 public:
  explicit Suite(const VerifyConfig& cfg) : cfg_(cfg) {}

  BracketLog log;

  // lower <= upper within tolerance
  void check_le(CriterionResult& c, std::string name, double lhs, double rhs, double tol) {
    c.rows.push_back({std::move(name), "<= " + format_double(rhs), format_double(lhs), tol, lhs <= rhs + tol});
  }
  void check_near(CriterionResult& c, std::string name, double got, double want, double tol) {
    c.rows.push_back({std::move(name), format_double(want), format_double(got), tol, std::abs(got - want) <= tol});
  }
  void check_true(CriterionResult& c, std::string name, bool ok, const std::string& got = "") {
    c.rows.push_back({std::move(name), "true", got.empty() ? (ok ? "true" : "false") : got, 0.0, ok});
  }

  NormBracket bracket(const std::string& name, const MatrixMolecule& mu, const OperatorMetricSpace& x,
                      const PairSet& pairs, const BracketOptions& o = {}) {
    auto b = norm_bracket(mu, x, pairs, o);
    log.add(name, b.lower, b.upper);
    return b;
  }

  std::uint64_t seed(std::uint64_t salt) const { return cfg_.seed * 1000003ULL + salt; }

  CriterionResult isometry();
  CriterionResult lp_oracle();
  CriterionResult sandwich();
  CriterionResult transpose();
  CriterionResult path_graph();
  CriterionResult trees();
  CriterionResult weak_duality();
  CriterionResult pairing();
  CriterionResult linearization();
  CriterionResult derivatives();

 private:
  VerifyConfig cfg_;
};

inline CriterionResult Suite::isometry() {
  auto c = criterion(1, "delta is an n-isometry on elementary molecules");
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed(1));
  for (int s = 0; s < 10; ++s) {
    const std::size_t points = 2 + static_cast<std::size_t>(s % 3);
    const auto d = static_cast<Eigen::Index>(1 + (s / 3) % 3);
    const auto x = random_space(rng, points, d, s % 2 == 0);
    for (std::size_t n : {1u, 2u}) {
      const PairSet pairs = constraint_pairs(*x, n);
      std::vector<std::size_t> chosen(pairs.size());
      std::iota(chosen.begin(), chosen.end(), std::size_t{0});
      if (n == 2 && chosen.size() > 50) {
        std::shuffle(chosen.begin(), chosen.end(), rng);
        chosen.resize(50);
        std::sort(chosen.begin(), chosen.end());
      }
      for (auto p : chosen) {
        const auto cp = pairs.pair(p);
        const double dist = pairs.dist(p);
        const std::string name = "isometry.s" + std::to_string(s) + ".n" + std::to_string(n) + ".p" + std::to_string(p);
        const auto b = bracket(name, MatrixMolecule::elementary(cp.a, cp.b), *x, pairs);
        const bool contains = b.lower <= dist * (1 + verify_tol::kContain) && b.upper >= dist * (1 - verify_tol::kContain);
        const double width = (b.upper - b.lower) / dist;
        c.rows.push_back({name + ".contains", format_double(dist),
                          "[" + format_double(b.lower) + ", " + format_double(b.upper) + "]", verify_tol::kContain,
                          contains});
        c.rows.push_back({name + ".width", "<= " + format_double(verify_tol::kIsometryWidth), format_double(width),
                          verify_tol::kIsometryWidth, width <= verify_tol::kIsometryWidth});
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  // The value goes to the summary only, so that check rows stay reproducible.
  check_true(c, "isometry.runtime_within_budget", secs <= verify_tol::kIsometrySeconds);
  c.summary = "runtime " + std::to_string(static_cast<int>(secs)) + " s of " +
              std::to_string(static_cast<int>(verify_tol::kIsometrySeconds));
  return c;
}

inline CriterionResult Suite::lp_oracle() {
  auto c = criterion(2, "level-1 dual and primal agree with the transport oracle");
  std::mt19937_64 rng(seed(2));
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    const auto x = random_space(rng, 4 + static_cast<std::size_t>(t % 3), 1 + t % 3, t % 2 == 0);
    Molecule mu;
    for (std::size_t p = 1; p < x->size(); ++p) mu.add(static_cast<PointId>(p), g(rng));
    const double lp = kantorovich_lp(mu, *x);
    const std::string name = "lp.m" + std::to_string(t);
    const auto b = bracket(name, mu, *x, constraint_pairs(*x, 1));
    check_near(c, name + ".dual", b.lower, lp, verify_tol::kLp * std::max(1.0, lp));
    check_le(c, name + ".primal_ge_lp", lp, b.upper, verify_tol::kPrimalBelowLp);
  }
  return c;
}

inline CriterionResult Suite::sandwich() {
  auto c = criterion(3, "Lip(f) <= Lip_2(f) <= 4 Lip(f)");
  std::mt19937_64 rng(seed(3));
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    const auto x = random_space(rng, 3 + static_cast<std::size_t>(t % 2), 1 + t % 3);
    const auto y = random_space(rng, 2 + static_cast<std::size_t>(t % 3), 1 + (t / 3) % 3);
    std::vector<PointId> assign{0};
    for (std::size_t p = 1; p < x->size(); ++p) assign.push_back(static_cast<PointId>(rng() % y->size()));
    const auto r = lip_sandwich_check(PointMap(x, y, assign), 2);
    const std::string name = "sandwich.map" + std::to_string(t);
    check_true(c, name + ".certified", r.certified);
    check_le(c, name + ".lip1_le_lip2", r.lip1, r.lipn, 0.0);
    check_le(c, name + ".lip2_le_4lip1", r.lipn, r.bound, 0.0);
  }
  for (int t = 0; t < 20; ++t) {
    const auto x = random_space(rng, 3 + static_cast<std::size_t>(t % 2), 1 + t % 3);
    std::vector<Complex> v{0.0};
    for (std::size_t p = 1; p < x->size(); ++p) v.emplace_back(g(rng), g(rng));
    const auto r = lip_sandwich_check(LipFunction(v), *x, 2);
    const std::string name = "sandwich.fn" + std::to_string(t);
    check_true(c, name + ".certified", r.certified);
    check_le(c, name + ".lip1_le_lip2", r.lip1, r.lipn, 0.0);
    check_le(c, name + ".lip2_le_4lip1", r.lipn, r.bound, 0.0);
  }
  return c;
}

inline CriterionResult Suite::transpose() {
  auto c = criterion(4, "transpose on the matrix units has Lip_1 = 1 and Lip_2 = 2");
  std::vector<CMatrix> pts{CMatrix::Zero(2, 2)};
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) {
      CMatrix e = CMatrix::Zero(2, 2);
      e(i, j) = 1.0;
      pts.push_back(e);
    }
  const auto x = std::make_shared<const OperatorMetricSpace>(pts, std::vector<std::string>{"0", "E11", "E12", "E21", "E22"});
  const PointMap t(x, x, {0, 1, 3, 2, 4});
  for (std::size_t n : {1u, 2u}) {
    const auto r = map_lip_constant(t, constraint_pairs(*x, n));
    check_true(c, "transpose.n" + std::to_string(n) + ".full", !r.sampled);
    check_near(c, "transpose.n" + std::to_string(n), r.value, static_cast<double>(n), verify_tol::kTranspose);
  }
  return c;
}

inline CriterionResult Suite::path_graph() {
  auto c = criterion(5, "the path on three vertices is l1^2");
  const auto x = std::make_shared<const OperatorMetricSpace>(
      std::vector<CMatrix>{CMatrix::Constant(1, 1, 0.0), CMatrix::Constant(1, 1, 1.0), CMatrix::Constant(1, 1, 2.0)});
  const PairSet pairs = constraint_pairs(*x, 1);
  const auto b = bracket("path.d1+d2", Molecule{{1, 1.0}, {2, 1.0}}, *x, pairs);
  c.rows.push_back({"path.d1+d2.contains", "3", "[" + format_double(b.lower) + ", " + format_double(b.upper) + "]",
                    verify_tol::kContain, b.lower <= 3 + verify_tol::kContain && b.upper >= 3 - verify_tol::kContain});
  check_le(c, "path.d1+d2.width", b.upper - b.lower, verify_tol::kPathWidth, 0.0);
  const std::vector<std::pair<Complex, Complex>> more{
      {1.0, -1.0}, {2.0, -0.5}, {Complex(0, 1), 1.0}, {Complex(1, 1), Complex(-2, 0.5)}, {-3.0, Complex(0, -2)}};
  for (std::size_t i = 0; i < more.size(); ++i) {
    const auto [a1, a2] = more[i];
    const double image = std::abs(a1 + a2) + std::abs(a2);
    const std::string name = "path.m" + std::to_string(i);
    const auto bb = bracket(name, Molecule{{1, a1}, {2, a2}}, *x, pairs);
    check_near(c, name + ".lower", bb.lower, image, verify_tol::kPathMatch);
    check_near(c, name + ".upper", bb.upper, image, verify_tol::kPathMatch);
  }
  return c;
}

inline CriterionResult Suite::trees() {
  auto c = criterion(6, "F^n of a path tree matches MAX(l1^k)");
  for (std::size_t k : {2u, 3u})
    for (std::size_t n : {1u, 2u}) {
      TreeCheckOptions o;
      o.seed = seed(60 + k * 10 + n);
      o.max_lower.seed = o.seed;
      o.max_mismatch = n == 1 ? verify_tol::kTreeLevelOne : verify_tol::kTreeMismatch;
      const auto rep = tree_freespace_check(RootedTree::path(k), n, o);
      const std::string base = "tree.k" + std::to_string(k) + ".n" + std::to_string(n);
      for (std::size_t s = 0; s < rep.samples.size(); ++s) {
        const auto& smp = rep.samples[s];
        const std::string name = base + ".m" + std::to_string(s);
        log.add(name + ".free", smp.free_bracket.lower, smp.free_bracket.upper);
        log.add(name + ".max", smp.max_lower, smp.max_upper);
        check_true(c, name + ".overlap", smp.overlap,
                   "F[" + format_double(smp.free_bracket.lower) + ", " + format_double(smp.free_bracket.upper) +
                       "] MAX[" + format_double(smp.max_lower) + ", " + format_double(smp.max_upper) + "]");
        check_le(c, name + ".mismatch", smp.mismatch, o.max_mismatch, 0.0);
      }
      c.summary += base + ": family " + std::to_string(rep.family_size) + ", size cap " + std::to_string(rep.size_cap) +
                   ", max mismatch " + format_double(rep.max_mismatch) + "; ";
    }
  return c;
}

inline CriterionResult Suite::weak_duality() {
  auto c = criterion(7, "every bracket satisfies lower <= upper + 1e-9");
  std::size_t bad = 0;
  for (const auto& e : log.entries)
    if (!(e.lower <= e.upper + verify_tol::kWeakDuality)) {
      ++bad;
      check_le(c, "weak." + e.name, e.lower, e.upper, verify_tol::kWeakDuality);
    }
  c.rows.push_back({"weak.violations", "0", std::to_string(bad) + " of " + std::to_string(log.entries.size()), 0.0,
                    bad == 0 && !log.entries.empty()});
  return c;
}

inline CriterionResult Suite::pairing() {
  auto c = criterion(8, "|mu(f)| <= Lip_n(f) upper(mu)");
  std::mt19937_64 rng(seed(8));
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = t < 50 ? 1 : 2;
    const bool matrix = n == 2 && t % 4 == 3;
    const auto x = random_space(rng, n == 1 ? 3 + static_cast<std::size_t>(t % 4) : 3 + static_cast<std::size_t>(t % 2),
                                1 + t % 3, t % 2 == 0);
    const std::size_t m = matrix ? 2 : 1, k = matrix ? 2 : 1;
    MatrixMolecule mu(m);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        for (std::size_t p = 1; p < x->size(); ++p) mu.at(a, b).add(static_cast<PointId>(p), Complex(g(rng), g(rng)));
    std::vector<CMatrix> vals{CMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))};
    for (std::size_t p = 1; p < x->size(); ++p) {
      CMatrix v(k, k);
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(g(rng), g(rng));
      vals.push_back(v);
    }
    const MatrixLipFunction f(k, vals);
    const PairSet pairs = constraint_pairs(*x, n);
    const double lip = lip_constant(f, pairs).value;
    const double up = primal_norm_upper(mu, *x, n).value;
    const double lhs = spectral_norm(mu.pairing(f));
    if (lip > 0.0) log.add("pairing.t" + std::to_string(t), lhs / lip, up);
    check_le(c, "pairing.t" + std::to_string(t) + (matrix ? ".matrix" : ".scalar"), lhs, lip * up, verify_tol::kPairing);
  }
  return c;
}

inline CriterionResult Suite::linearization() {
  auto c = criterion(9, "the lifted map is functorial and has norm Lip_n(L)");
  std::mt19937_64 rng(seed(9));
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = t < 5 ? 1 : 2;
    const std::size_t points = n == 1 ? 5 : 3;
    const auto x = random_space(rng, points, 1 + t % 2, t % 2 == 0);
    const auto y = random_space(rng, points, 1 + (t / 2) % 3);
    const auto z = random_space(rng, 3, 2);
    auto random_map = [&](auto a, auto b) {
      std::vector<PointId> assign{0};
      for (std::size_t p = 1; p < a->size(); ++p) assign.push_back(static_cast<PointId>(rng() % b->size()));
      return PointMap(a, b, assign);
    };
    const auto f = random_map(x, y);
    const auto h = random_map(y, z);
    // Integer coefficients keep every regrouped sum exact.
    std::uniform_int_distribution<int> coef(-9, 9);
    Molecule mu;
    for (std::size_t p = 1; p < x->size(); ++p) mu.add(static_cast<PointId>(p), Complex(coef(rng), coef(rng)));
    const std::string name = "lift.map" + std::to_string(t);
    check_true(c, name + ".functorial", lift_apply(h.after(f), mu) == lift_apply(h, lift_apply(f, mu)));
    LiftCheckOptions o;
    o.seed = seed(900 + static_cast<std::uint64_t>(t));
    o.slack = verify_tol::kContractive;
    o.witness_slack = verify_tol::kLiftWitness;
    const auto rep = lift_contractivity_check(f, n, o);
    check_le(c, name + ".contractive", rep.max_excess, 0.0, verify_tol::kContractive);
    if (rep.lip.value > 0.0)
      check_le(c, name + ".witness", rep.lip.value - rep.witness_ratio, 0.0, verify_tol::kLiftWitness);
  }
  return c;
}

inline CriterionResult Suite::derivatives() {
  auto c = criterion(10, "derivative norms stay below sampled Lip_2");
  std::mt19937_64 rng(seed(10));
  std::normal_distribution<double> g;
  auto random_cell = [&](Eigen::Index d) {
    CMatrix m(d, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = Complex(g(rng), g(rng));
    return m;
  };
  for (int t = 0; t < 5; ++t) {
    const Eigen::Index d = 2 + t % 2;
    const CMatrix a = random_cell(d), b = random_cell(d), e = random_cell(d), h = random_cell(d), k = random_cell(d);
    const auto in = SymbolicMap::input(static_cast<std::size_t>(d));
    auto cst = [&](const CMatrix& m) { return SymbolicMap::constant(static_cast<std::size_t>(d), m); };
    const auto f = cst(a) * in * cst(b) + cst(e) * in * cst(h) + cst(k);
    const CMatrix x = random_cell(d), dir = random_cell(d);
    const CMatrix want = a * dir * b + e * dir * h;
    const double err = (gateaux_fd(f, x, dir) - want).norm() / std::max(1.0, want.norm());
    check_le(c, "deriv.linear" + std::to_string(t), err, 0.0, verify_tol::kLinearPart);
  }
  const auto in = SymbolicMap::input(2);
  const auto sq = in * in;
  for (int t = 0; t < 8; ++t) {
    const CMatrix x = (0.25 + 0.5 * t) * random_cell(2) / std::sqrt(8.0);
    DerivativeOptions o;
    o.seed = seed(1000 + static_cast<std::uint64_t>(t));
    o.slack = verify_tol::kDerivative;
    const auto rep = derivative_bound_check(sq, x, 2, o);
    check_le(c, "deriv.square.mesh" + std::to_string(t), rep.derivative_norm, rep.lip_estimate, verify_tol::kDerivative);
  }
  return c;
}

}  // namespace detail

inline const std::vector<std::pair<int, std::string>>& criterion_titles() {
  static const std::vector<std::pair<int, std::string>> t{
      {1, "isometry"}, {2, "lp-oracle"}, {3, "lip-sandwich"}, {4, "transpose"}, {5, "path-graph"},
      {6, "tree"},     {7, "weak-duality"}, {8, "pairing"}, {9, "linearization"}, {10, "derivative"}};
  return t;
}

/// Runs the acceptance criteria. Weak duality runs last so that it covers
/// the brackets of every other criterion; results come back sorted by id.
/// `done` is called after each criterion, in run order.
inline std::vector<CriterionResult> run_verify(const VerifyConfig& cfg,
                                               const std::function<void(const CriterionResult&)>& done = {}) {
  detail::Suite suite(cfg);
  const std::vector<std::function<CriterionResult()>> steps{
      [&] { return suite.isometry(); },     [&] { return suite.lp_oracle(); },  [&] { return suite.sandwich(); },
      [&] { return suite.transpose(); },    [&] { return suite.path_graph(); }, [&] { return suite.trees(); },
      [&] { return suite.weak_duality(); }, [&] { return suite.pairing(); },    [&] { return suite.linearization(); },
      [&] { return suite.derivatives(); }};
  std::vector<CriterionResult> out;
  for (std::size_t i : {0, 1, 2, 3, 4, 5, 7, 8, 9, 6}) {
    const int id = static_cast<int>(i + 1);
    if (!cfg.only.empty() && std::find(cfg.only.begin(), cfg.only.end(), id) == cfg.only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    auto r = steps[i]();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.pass = !r.rows.empty() && std::all_of(r.rows.begin(), r.rows.end(), [](const CheckRow& row) { return row.pass; });
    if (done) done(r);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

}  // namespace opfree

#endif  // OPFREE_VERIFY_HPP
