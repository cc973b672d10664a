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

#ifndef OPFREE_LIPCALC_HPP
#define OPFREE_LIPCALC_HPP

#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "opfree/opspace.hpp"

namespace opfree {

/// A basepoint-vanishing scalar function on X, one value per point.
struct LipFunction {
  std::vector<Complex> values;

  explicit LipFunction(std::vector<Complex> v) : values(std::move(v)) {
    if (values.empty() || values[0] != Complex(0.0))
      throw InvalidInput("Lipschitz function must vanish at the basepoint");
  }
  std::size_t size() const noexcept { return values.size(); }
};

/// [f_rs] in M_k(Lip_0(X)), stored as the equivalent X -> M_k map.
class MatrixLipFunction {
 public:
  MatrixLipFunction() = default;
  MatrixLipFunction(std::size_t k, std::vector<CMatrix> values) : k_(k), values_(std::move(values)) {
    if (k_ == 0) throw InvalidInput("matrix function size must be positive");
    for (const auto& v : values_)
      if (static_cast<std::size_t>(v.rows()) != k_ || static_cast<std::size_t>(v.cols()) != k_)
        throw InvalidInput("matrix function values must be k x k");
    if (values_.empty() || !values_[0].isZero(0.0))
      throw InvalidInput("matrix function must vanish at the basepoint");
  }
  MatrixLipFunction(const LipFunction& f) : k_(1) {  // NOLINT(google-explicit-constructor)
    for (Complex z : f.values) values_.push_back(CMatrix::Constant(1, 1, z));
  }
  static MatrixLipFunction zero(std::size_t points, std::size_t k) {
    return {k, std::vector<CMatrix>(points, CMatrix::Zero(static_cast<Eigen::Index>(k),
                                                          static_cast<Eigen::Index>(k)))};
  }

  std::size_t k() const noexcept { return k_; }
  std::size_t size() const noexcept { return values_.size(); }
  const CMatrix& at(std::size_t x) const { return values_.at(x); }
  const std::vector<CMatrix>& values() const noexcept { return values_; }

  LipFunction entry(std::size_t r, std::size_t s) const {
    std::vector<Complex> v;
    for (const auto& m : values_) v.push_back(m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)));
    return LipFunction(std::move(v));
  }
  MatrixLipFunction scaled(Complex c) const {
    MatrixLipFunction out = *this;
    for (auto& m : out.values_) m *= c;
    return out;
  }

 private:
  std::size_t k_ = 1;
  std::vector<CMatrix> values_;
};

struct LipResult {
  double value = 0.0;
  bool sampled = false;             // a lower bound only
  std::size_t argmax = 0;           // index into the pair set
};

namespace detail {

// ||[F(a_ij) - F(b_ij)]|| as an nk x nk matrix.
inline double constraint_value(const MatrixLipFunction& f, std::span<const PointId> a,
                               std::span<const PointId> b, std::size_t n) {
  const auto k = static_cast<Eigen::Index>(f.k());
  CMatrix c(static_cast<Eigen::Index>(n) * k, static_cast<Eigen::Index>(n) * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto blk = c.block(static_cast<Eigen::Index>(i) * k, static_cast<Eigen::Index>(j) * k, k, k);
      const PointId p = a[i * n + j], q = b[i * n + j];
      if (p == q)
        blk.setZero();
      else
        blk = f.at(p) - f.at(q);
    }
  return spectral_norm(c);
}

inline void check_pairs_for(const MatrixLipFunction& f, const PairSet& pairs) {
  if (pairs.point_count() != f.size())
    throw InvalidInput("function and pair set are over different spaces");
}

}  // namespace detail

/// ||[f_rs]||_{Lip,n,k}: the max ratio over the supplied pairs. Exact under
/// full enumeration; a lower bound (flagged) under sampling.
inline LipResult lip_constant(const MatrixLipFunction& f, const PairSet& pairs) {
  if (pairs.empty()) throw InvalidInput("lip_constant: empty pair set");
  detail::check_pairs_for(f, pairs);
  const std::size_t n = pairs.level();
  const ArgMax best = parallel_argmax(pairs.size(), [&](std::size_t p) {
    return detail::constraint_value(f, pairs.a(p), pairs.b(p), n) / pairs.dist(p);
  });
  return {best.value, pairs.sampled(), best.index};
}

/// max over pairs of (||[f(a) - f(b)]|| - dist); <= 0 iff f is in the ball.
inline double ball_violation(const MatrixLipFunction& f, const PairSet& pairs) {
  if (pairs.empty()) throw InvalidInput("ball_violation: empty pair set");
  detail::check_pairs_for(f, pairs);
  const std::size_t n = pairs.level();
  return parallel_argmax(pairs.size(), [&](std::size_t p) {
           return detail::constraint_value(f, pairs.a(p), pairs.b(p), n) - pairs.dist(p);
         }).value;
}

/// A basepoint-preserving map between finite operator metric spaces.
struct PointMap {
  std::shared_ptr<const OperatorMetricSpace> source;
  std::shared_ptr<const OperatorMetricSpace> target;
  std::vector<PointId> assignment;

  PointMap(std::shared_ptr<const OperatorMetricSpace> src,
           std::shared_ptr<const OperatorMetricSpace> tgt, std::vector<PointId> assign)
      : source(std::move(src)), target(std::move(tgt)), assignment(std::move(assign)) {
    if (!source || !target) throw InvalidInput("map needs a source and a target space");
    if (assignment.size() != source->size()) throw InvalidInput("map must assign every source point");
    for (PointId y : assignment)
      if (y >= target->size()) throw InvalidInput("map assigns an out-of-range target point");
    if (assignment[0] != target->basepoint()) throw InvalidInput("map must send basepoint to basepoint");
  }

  static PointMap identity(std::shared_ptr<const OperatorMetricSpace> x) {
    std::vector<PointId> a(x->size());
    std::iota(a.begin(), a.end(), PointId{0});
    return {x, x, std::move(a)};
  }
  static PointMap to_basepoint(std::shared_ptr<const OperatorMetricSpace> x,
                               std::shared_ptr<const OperatorMetricSpace> y) {
    const std::size_t count = x ? x->size() : 0;
    return {std::move(x), std::move(y), std::vector<PointId>(count, 0)};
  }

  PointId operator()(PointId x) const { return assignment.at(x); }
  MatrixPoint operator()(const MatrixPoint& a) const {
    MatrixPoint out = a;
    for (auto& c : out.cells) c = assignment.at(c);
    return out;
  }

  bool bijective() const {
    if (source->size() != target->size()) return false;
    std::vector<bool> hit(target->size(), false);
    for (PointId y : assignment) {
      if (hit[y]) return false;
      hit[y] = true;
    }
    return true;
  }
  PointMap inverse() const {
    if (!bijective()) throw InvalidInput("map is not bijective");
    std::vector<PointId> inv(assignment.size());
    for (std::size_t x = 0; x < assignment.size(); ++x) inv[assignment[x]] = static_cast<PointId>(x);
    return {target, source, std::move(inv)};
  }
  /// this after `first`.
  PointMap after(const PointMap& first) const {
    if (first.target.get() != source.get()) throw InvalidInput("maps do not compose");
    std::vector<PointId> a(first.assignment.size());
    for (std::size_t x = 0; x < a.size(); ++x) a[x] = assignment[first.assignment[x]];
    return {first.source, target, std::move(a)};
  }
};

/// Lip_n(L) over source pairs at level n.
inline LipResult map_lip_constant(const PointMap& l, const PairSet& source_pairs) {
  if (source_pairs.empty()) throw InvalidInput("map_lip_constant: empty pair set");
  if (source_pairs.point_count() != l.source->size())
    throw InvalidInput("pair set is not over the map's source");
  const std::size_t n = source_pairs.level();
  const std::size_t cells = n * n;
  const ArgMax best = parallel_argmax(source_pairs.size(), [&](std::size_t p) {
    std::vector<PointId> a(cells), b(cells);
    const auto sa = source_pairs.a(p), sb = source_pairs.b(p);
    bool same = true;
    for (std::size_t c = 0; c < cells; ++c) {
      a[c] = l.assignment[sa[c]];
      b[c] = l.assignment[sb[c]];
      same = same && a[c] == b[c];
    }
    if (same) return 0.0;
    return spectral_norm(detail::grid_difference(*l.target, a, b, n)) / source_pairs.dist(p);
  });
  return {best.value, source_pairs.sampled(), best.index};
}

struct Distortion {
  LipResult forward;   // Lip_n(L)
  LipResult backward;  // Lip_n(L^-1)
  double value() const { return forward.value * backward.value; }
};

/// (Lip_n(L), Lip_n(L^-1)) for a bijective map, by full enumeration.
inline Distortion map_distortion(const PointMap& l, std::size_t n, PairBudget budget = {}) {
  if (!l.bijective()) throw InvalidInput("map_distortion needs a bijective map");
  const PairSet src = constraint_pairs(*l.source, n, PairMode::full(), budget);
  const PairSet tgt = constraint_pairs(*l.target, n, PairMode::full(), budget);
  return {map_lip_constant(l, src), map_lip_constant(l.inverse(), tgt)};
}

struct SandwichReport {
  double lip1 = 0.0;
  double lipn = 0.0;
  double bound = 0.0;  // n^2 * lip1
  bool certified = false;
  bool pass = false;
};

namespace detail {

template <typename Eval>
SandwichReport sandwich(const OperatorMetricSpace& x, std::size_t n, PairBudget budget,
                        std::uint64_t seed, Eval&& eval) {
  SandwichReport r;
  bool full = true;
  auto pairs_at = [&](std::size_t level) {
    try {
      return constraint_pairs(x, level, PairMode::full(), budget);
    } catch (const BudgetExceeded&) {
      full = false;
      return constraint_pairs(x, level, PairMode::sample(20000, seed), budget);
    }
  };
  r.lip1 = eval(pairs_at(1));
  r.lipn = eval(pairs_at(n));
  r.bound = static_cast<double>(n * n) * r.lip1;
  r.certified = full;
  r.pass = full && r.lip1 <= r.lipn && r.lipn <= r.bound;
  return r;
}

}  // namespace detail

/// Lip_1(f) <= Lip_n(f) <= n^2 Lip_1(f), checked on computed maxima. Refuses
/// to certify (pass = false, certified = false) when only sampled data fits
/// the budget; the values are then informational.
inline SandwichReport lip_sandwich_check(const MatrixLipFunction& f, const OperatorMetricSpace& x,
                                         std::size_t n, PairBudget budget = {},
                                         std::uint64_t seed = 0) {
  return detail::sandwich(x, n, budget, seed,
                          [&](const PairSet& p) { return lip_constant(f, p).value; });
}

inline SandwichReport lip_sandwich_check(const PointMap& l, std::size_t n, PairBudget budget = {},
                                         std::uint64_t seed = 0) {
  return detail::sandwich(*l.source, n, budget, seed,
                          [&](const PairSet& p) { return map_lip_constant(l, p).value; });
}

}  // namespace opfree

#endif  // OPFREE_LIPCALC_HPP
