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

#ifndef OPFREE_OPSPACE_HPP
#define OPFREE_OPSPACE_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "opfree/matcore.hpp"
#include "opfree/parallel.hpp"

namespace opfree {

using PointId = std::uint32_t;

/// Entrywise gap below which two points count as the same matrix.
inline constexpr double kPointDistinctTol = 1e-12;

/// A finite pointed subset of M_d. The basepoint is always index 0.
class OperatorMetricSpace {
 public:
  OperatorMetricSpace(std::vector<CMatrix> points, std::vector<std::string> labels = {})
      : points_(std::move(points)), labels_(std::move(labels)) {
    if (points_.size() < 2) throw InvalidInput("space needs at least two points");
    if (points_.size() > 0xFFFF) throw InvalidInput("space has too many points");
    dim_ = static_cast<std::size_t>(points_[0].rows());
    if (dim_ == 0) throw InvalidInput("ambient dimension must be positive");
    for (const auto& p : points_) {
      if (static_cast<std::size_t>(p.rows()) != dim_ || static_cast<std::size_t>(p.cols()) != dim_)
        throw InvalidInput("all points must be d x d matrices of a common d");
      require_finite(p, "point");
    }
    if (labels_.empty())
      for (std::size_t i = 0; i < points_.size(); ++i) labels_.push_back("x" + std::to_string(i));
    if (labels_.size() != points_.size()) throw InvalidInput("label count differs from point count");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_)
      if (!seen.insert(l).second) throw InvalidInput("duplicate point name '" + l + "'");
    for (std::size_t i = 0; i < points_.size(); ++i)
      for (std::size_t j = i + 1; j < points_.size(); ++j)
        if ((points_[i] - points_[j]).cwiseAbs().maxCoeff() <= kPointDistinctTol)
          throw InvalidInput("points '" + labels_[i] + "' and '" + labels_[j] +
                             "' coincide");
  }

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t ambient_dim() const noexcept { return dim_; }
  PointId basepoint() const noexcept { return 0; }
  const CMatrix& point(std::size_t i) const { return points_.at(i); }
  const std::vector<CMatrix>& points() const noexcept { return points_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  std::optional<PointId> find(const std::string& name) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == name) return static_cast<PointId>(i);
    return std::nullopt;
  }

 private:
  std::vector<CMatrix> points_;
  std::vector<std::string> labels_;
  std::size_t dim_ = 0;
};

/// An element [x_ij] of M_n(X), stored row-major as point indices.
struct MatrixPoint {
  std::size_t n = 1;
  std::vector<PointId> cells;

  MatrixPoint() : cells(1, 0) {}
  MatrixPoint(std::size_t level, std::vector<PointId> grid) : n(level), cells(std::move(grid)) {
    if (cells.size() != n * n) throw InvalidInput("matrix point grid must have n*n cells");
  }
  /// Every cell equal to `x`.
  static MatrixPoint constant(std::size_t level, PointId x) {
    return MatrixPoint(level, std::vector<PointId>(level * level, x));
  }
  /// `x` on the diagonal, `base` elsewhere; the distance between two such
  /// grids equals the level-1 distance of their points.
  static MatrixPoint diagonal(std::size_t level, PointId x, PointId base = 0) {
    MatrixPoint g = constant(level, base);
    for (std::size_t i = 0; i < level; ++i) g.cells[i * level + i] = x;
    return g;
  }
  /// `x` in cell (0,0), `base` elsewhere.
  static MatrixPoint corner(std::size_t level, PointId x, PointId base = 0) {
    MatrixPoint g = constant(level, base);
    g.cells[0] = x;
    return g;
  }
  PointId at(std::size_t i, std::size_t j) const { return cells[i * n + j]; }
  bool operator==(const MatrixPoint&) const = default;
  auto operator<=>(const MatrixPoint& o) const {
    if (n != o.n) return n <=> o.n;
    return cells <=> o.cells;
  }
};

inline void check_point(const OperatorMetricSpace& x, const MatrixPoint& a) {
  if (a.cells.size() != a.n * a.n) throw InvalidInput("malformed matrix point");
  for (PointId c : a.cells)
    if (c >= x.size()) throw InvalidInput("matrix point index out of range");
}

/// Canonical realization of [x_ij] in M_{nd}.
inline CMatrix assemble(const OperatorMetricSpace& x, const MatrixPoint& a) {
  check_point(x, a);
  const auto d = static_cast<Eigen::Index>(x.ambient_dim());
  CMatrix out(static_cast<Eigen::Index>(a.n) * d, static_cast<Eigen::Index>(a.n) * d);
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = 0; j < a.n; ++j)
      out.block(static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(j) * d, d, d) =
          x.point(a.at(i, j));
  return out;
}

namespace detail {

inline CMatrix grid_difference(const OperatorMetricSpace& x, std::span<const PointId> a,
                               std::span<const PointId> b, std::size_t n) {
  const auto d = static_cast<Eigen::Index>(x.ambient_dim());
  CMatrix out(static_cast<Eigen::Index>(n) * d, static_cast<Eigen::Index>(n) * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto blk = out.block(static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(j) * d, d, d);
      const PointId p = a[i * n + j], q = b[i * n + j];
      if (p == q)
        blk.setZero();
      else
        blk = x.point(p) - x.point(q);
    }
  return out;
}

}  // namespace detail

/// ||[x_ij - y_ij]|| in M_n(B(H)).
inline double amplified_distance(const OperatorMetricSpace& x, const MatrixPoint& a,
                                 const MatrixPoint& b) {
  if (a.n != b.n) throw InvalidInput("amplified_distance: level mismatch");
  check_point(x, a);
  check_point(x, b);
  return spectral_norm(detail::grid_difference(x, a.cells, b.cells, a.n));
}

/// |X|^(n^2), or nullopt on overflow past 2^63.
inline std::optional<std::uint64_t> grid_count(std::size_t points, std::size_t n) {
  std::uint64_t total = 1;
  for (std::size_t c = 0; c < n * n; ++c) {
    if (total > (std::uint64_t{1} << 62) / points) return std::nullopt;
    total *= points;
  }
  return total;
}

/// The grid with lexicographic rank `index` (cell (0,0) most significant).
inline MatrixPoint grid_from_index(std::size_t points, std::size_t n, std::uint64_t index) {
  std::vector<PointId> cells(n * n);
  for (std::size_t c = n * n; c-- > 0;) {
    cells[c] = static_cast<PointId>(index % points);
    index /= points;
  }
  return MatrixPoint(n, std::move(cells));
}

/// All of M_n(X) in lexicographic order; BudgetExceeded if |X|^(n^2) > cap.
inline std::vector<MatrixPoint> enumerate_matrix_points(const OperatorMetricSpace& x,
                                                        std::size_t n, std::uint64_t cap) {
  if (n == 0) throw InvalidInput("level must be at least 1");
  const auto count = grid_count(x.size(), n);
  if (!count) throw BudgetExceeded("matrix point enumeration overflows", ~std::uint64_t{0});
  if (*count > cap) throw BudgetExceeded("matrix point enumeration exceeds cap", *count);
  std::vector<MatrixPoint> out;
  out.reserve(static_cast<std::size_t>(*count));
  for (std::uint64_t i = 0; i < *count; ++i) out.push_back(grid_from_index(x.size(), n, i));
  return out;
}

/// A Lipschitz-ball constraint: the pair (a, b) with a < b and its distance.
struct ConstraintPair {
  MatrixPoint a;
  MatrixPoint b;
  double dist = 0.0;
};

struct PairMode {
  bool sampled = false;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  static PairMode full() { return {}; }
  static PairMode sample(std::size_t k, std::uint64_t seed = 0) { return {true, k, seed}; }
};

/// Full enumeration limits. Beyond them sampling is mandatory.
struct PairBudget {
  std::uint64_t point_cap = 1296;
  std::uint64_t pair_cap = 900000;
};

/// Immutable table of constraint pairs at one level with their distances,
/// stored flat: pair p occupies cells [2 p n^2, 2 (p+1) n^2).
class PairSet {
 public:
  PairSet(std::size_t level, std::size_t points, bool sampled)
      : n_(level), points_(points), sampled_(sampled) {}

  std::size_t level() const noexcept { return n_; }
  std::size_t point_count() const noexcept { return points_; }
  bool sampled() const noexcept { return sampled_; }
  std::size_t size() const noexcept { return dist_.size(); }
  bool empty() const noexcept { return dist_.empty(); }

  std::span<const PointId> a(std::size_t p) const {
    return {cells_.data() + 2 * p * n_ * n_, n_ * n_};
  }
  std::span<const PointId> b(std::size_t p) const {
    return {cells_.data() + (2 * p + 1) * n_ * n_, n_ * n_};
  }
  double dist(std::size_t p) const { return dist_[p]; }
  double max_dist() const {
    double m = 0.0;
    for (double d : dist_) m = std::max(m, d);
    return m;
  }
  double min_dist() const {
    double m = std::numeric_limits<double>::infinity();
    for (double d : dist_) m = std::min(m, d);
    return m;
  }

  ConstraintPair pair(std::size_t p) const {
    const auto sa = a(p), sb = b(p);
    return {MatrixPoint(n_, {sa.begin(), sa.end()}), MatrixPoint(n_, {sb.begin(), sb.end()}),
            dist_[p]};
  }

  void push(std::span<const PointId> a, std::span<const PointId> b, double d) {
    cells_.insert(cells_.end(), a.begin(), a.end());
    cells_.insert(cells_.end(), b.begin(), b.end());
    dist_.push_back(d);
  }

  /// Builds a table from explicit pairs (distances computed here).
  static PairSet from_pairs(const OperatorMetricSpace& x, std::size_t level,
                            const std::vector<std::pair<MatrixPoint, MatrixPoint>>& pairs,
                            bool sampled) {
    PairSet s(level, x.size(), sampled);
    for (const auto& [a, b] : pairs) {
      const double d = amplified_distance(x, a, b);
      if (d > 0) {
        if (b < a)
          s.push(b.cells, a.cells, d);
        else
          s.push(a.cells, b.cells, d);
      }
    }
    return s;
  }

 private:
  std::size_t n_;
  std::size_t points_;
  bool sampled_;
  std::vector<PointId> cells_;
  std::vector<double> dist_;
};

/// Constraint pairs at level n. Full mode: every unordered pair of distinct
/// grids (swap-deduplicated, lexicographic). Sampled mode: all pairs against
/// the constant-basepoint grid plus `samples` seeded random pairs.
inline PairSet constraint_pairs(const OperatorMetricSpace& x, std::size_t n,
                                PairMode mode = PairMode::full(), PairBudget budget = {}) {
  if (n == 0) throw InvalidInput("level must be at least 1");
  const std::size_t cells = n * n;
  const auto count = grid_count(x.size(), n);
  PairSet out(n, x.size(), mode.sampled);

  std::vector<PointId> flat;
  auto compute = [&](std::size_t pairs) {
    std::vector<double> dist(pairs);
    parallel_chunks(
        pairs,
        [&](std::size_t lo, std::size_t hi) {
          for (std::size_t p = lo; p < hi; ++p)
            dist[p] = spectral_norm(detail::grid_difference(
                x, {flat.data() + 2 * p * cells, cells}, {flat.data() + (2 * p + 1) * cells, cells},
                n));
        },
        512);
    for (std::size_t p = 0; p < pairs; ++p)
      if (dist[p] > 0)
        out.push({flat.data() + 2 * p * cells, cells}, {flat.data() + (2 * p + 1) * cells, cells},
                 dist[p]);
  };

  if (!mode.sampled) {
    if (!count || *count > budget.point_cap)
      throw BudgetExceeded("full enumeration exceeds the point budget; use sampled pairs",
                           count.value_or(~std::uint64_t{0}));
    const std::uint64_t g = *count;
    const std::uint64_t pairs = g * (g - 1) / 2;
    if (pairs > budget.pair_cap)
      throw BudgetExceeded("full enumeration exceeds the pair budget; use sampled pairs", pairs);
    std::vector<MatrixPoint> grids;
    grids.reserve(static_cast<std::size_t>(g));
    for (std::uint64_t i = 0; i < g; ++i) grids.push_back(grid_from_index(x.size(), n, i));
    flat.reserve(static_cast<std::size_t>(pairs) * 2 * cells);
    for (std::size_t i = 0; i < grids.size(); ++i)
      for (std::size_t j = i + 1; j < grids.size(); ++j) {
        flat.insert(flat.end(), grids[i].cells.begin(), grids[i].cells.end());
        flat.insert(flat.end(), grids[j].cells.begin(), grids[j].cells.end());
      }
    compute(static_cast<std::size_t>(pairs));
    return out;
  }

  // Sampled: every pair touching the constant-basepoint grid, then random pairs.
  if (!count || *count - 1 > budget.pair_cap)
    throw BudgetExceeded("basepoint pairs alone exceed the pair budget",
                         count ? *count - 1 : ~std::uint64_t{0});
  const std::uint64_t g = *count;
  const MatrixPoint base = MatrixPoint::constant(n, x.basepoint());
  std::size_t npairs = 0;
  for (std::uint64_t i = 1; i < g; ++i) {
    const MatrixPoint other = grid_from_index(x.size(), n, i);
    flat.insert(flat.end(), base.cells.begin(), base.cells.end());
    flat.insert(flat.end(), other.cells.begin(), other.cells.end());
    ++npairs;
  }
  std::mt19937_64 rng(mode.seed);
  std::uniform_int_distribution<PointId> pick(0, static_cast<PointId>(x.size() - 1));
  std::set<std::pair<std::vector<PointId>, std::vector<PointId>>> seen;
  std::size_t attempts = 0;
  std::size_t added = 0;
  while (added < mode.samples && attempts < 50 * mode.samples + 100) {
    ++attempts;
    std::vector<PointId> a(cells), b(cells);
    for (auto& c : a) c = pick(rng);
    for (auto& c : b) c = pick(rng);
    if (a == b) continue;
    if (b < a) std::swap(a, b);
    if (a == base.cells) continue;  // already present
    if (!seen.emplace(a, b).second) continue;
    flat.insert(flat.end(), a.begin(), a.end());
    flat.insert(flat.end(), b.begin(), b.end());
    ++npairs;
    ++added;
  }
  compute(npairs);
  return out;
}

}  // namespace opfree

#endif  // OPFREE_OPSPACE_HPP
