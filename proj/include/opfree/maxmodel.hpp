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

#ifndef OPFREE_MAXMODEL_HPP
#define OPFREE_MAXMODEL_HPP

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "opfree/freenorm.hpp"
#include "opfree/parallel.hpp"

namespace opfree {

/// x = sum_t x_t (x) e_t in M_n(l1^k).
struct L1MatrixElement {
  std::vector<CMatrix> components;

  L1MatrixElement() = default;
  explicit L1MatrixElement(std::vector<CMatrix> c) : components(std::move(c)) {
    if (components.empty()) throw InvalidInput("l1 element needs at least one coordinate");
    const auto n = components[0].rows();
    for (const auto& m : components) {
      if (m.rows() != n || m.cols() != n || n == 0) throw InvalidInput("l1 coordinates must be n x n of a common n");
      require_finite(m, "l1 coordinate");
    }
  }

  std::size_t n() const { return static_cast<std::size_t>(components.at(0).rows()); }
  std::size_t k() const noexcept { return components.size(); }
  /// sum_t |x_t| when n = 1.
  double l1_norm() const {
    double s = 0.0;
    for (const auto& m : components) s += m.cwiseAbs().sum();
    return s;
  }
};

/// sum_t x_t (x) u_t, blocks indexed by the entries of x_t.
inline CMatrix tuple_apply(const L1MatrixElement& x, const std::vector<CMatrix>& u) {
  if (u.size() != x.k()) throw InvalidInput("tuple length differs from the coordinate count");
  const auto n = static_cast<Eigen::Index>(x.n());
  const auto s = u.empty() ? 0 : u[0].rows();
  CMatrix out = CMatrix::Zero(n * s, n * s);
  for (std::size_t t = 0; t < u.size(); ++t) {
    if (u[t].rows() != s || u[t].cols() != s) throw InvalidInput("tuple matrices must share one size");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (x.components[t](i, j) != Complex(0.0)) out.block(i * s, j * s, s, s) += x.components[t](i, j) * u[t];
  }
  return out;
}

struct MaxLowerOptions {
  std::size_t size_cap = 0;  // 0 selects n k
  int trials = 200;
  int steps = 100;
  std::uint64_t seed = 0;
};

struct MaxLowerResult {
  double value = 0.0;
  std::vector<CMatrix> tuple;  // the maximizing unitaries
  std::size_t size_cap = 0;
  std::size_t best_trial = 0;
};

namespace detail {

inline CMatrix random_unitary(std::mt19937_64& rng, Eigen::Index s) {
  std::normal_distribution<double> g;
  CMatrix m(s, s);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = Complex(g(rng), g(rng));
  return polar_factor(m);
}

// Gradient of Re xi^* (sum x_t (x) u_t) eta in u_t.
inline std::vector<CMatrix> tuple_gradient(const L1MatrixElement& x, const SingularPair& top, Eigen::Index s) {
  const auto n = static_cast<Eigen::Index>(x.n());
  std::vector<CMatrix> grad(x.k(), CMatrix::Zero(s, s));
  for (std::size_t t = 0; t < x.k(); ++t)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        grad[t] += std::conj(x.components[t](i, j)) * top.left.segment(i * s, s) * top.right.segment(j * s, s).adjoint();
  return grad;
}

// Ascent over unitary tuples with polar retraction; the step halves on
// every non-improving move.
inline double tuple_ascent(const L1MatrixElement& x, std::vector<CMatrix>& u, int steps) {
  const Eigen::Index s = u[0].rows();
  SingularPair top = top_singular_pair(tuple_apply(x, u));
  double step = 1.0;
  for (int it = 0; it < steps && step > 1e-10; ++it) {
    const auto grad = tuple_gradient(x, top, s);
    double gn = 0.0;
    for (const auto& gt : grad) gn = std::max(gn, spectral_norm(gt));
    if (gn == 0.0) break;
    std::vector<CMatrix> cand(u.size());
    for (std::size_t t = 0; t < u.size(); ++t) cand[t] = polar_factor(u[t] + (step / gn) * grad[t]);
    SingularPair next = top_singular_pair(tuple_apply(x, cand));
    if (next.sigma > top.sigma) {
      u = std::move(cand);
      top = std::move(next);
    } else {
      step *= 0.5;
    }
  }
  return top.sigma;
}

}  // namespace detail

/// Lower bound for the MAX(l1^k) norm of x: the best ||sum x_t (x) u_t|| over
/// seeded unitary tuples of size size_cap. Trial 0 starts from scalar phases,
/// which already attain the l1 norm when n = 1.
inline MaxLowerResult maxl1_lower(const L1MatrixElement& x, const MaxLowerOptions& opts = {}) {
  const std::size_t cap = opts.size_cap == 0 ? x.n() * x.k() : opts.size_cap;
  const auto s = static_cast<Eigen::Index>(cap);
  MaxLowerResult res;
  res.size_cap = cap;
  bool zero = true;
  for (const auto& m : x.components) zero = zero && m.isZero(0.0);
  if (zero) {
    res.tuple.assign(x.k(), CMatrix::Identity(s, s));
    return res;
  }
  const auto trials = static_cast<std::size_t>(std::max(1, opts.trials));
  std::vector<double> value(trials, -1.0);
  std::vector<std::vector<CMatrix>> tuples(trials);
  parallel_chunks(
      trials,
      [&](std::size_t lo, std::size_t hi) {
        for (std::size_t tr = lo; tr < hi; ++tr) {
          std::vector<CMatrix> u(x.k());
          if (tr == 0) {
            for (std::size_t t = 0; t < x.k(); ++t) {
              const Complex z = x.components[t].sum();
              const Complex ph = std::abs(z) > 0.0 ? std::conj(z) / std::abs(z) : Complex(1.0);
              u[t] = ph * CMatrix::Identity(s, s);
            }
          } else {
            std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                              static_cast<std::uint32_t>(tr)};
            std::mt19937_64 rng(seq);
            for (auto& ut : u) ut = detail::random_unitary(rng, s);
          }
          value[tr] = detail::tuple_ascent(x, u, opts.steps);
          tuples[tr] = std::move(u);
        }
      },
      1);
  res.value = -1.0;
  for (std::size_t tr = 0; tr < trials; ++tr)
    if (value[tr] > res.value) {
      res.value = value[tr];
      res.best_trial = tr;
    }
  res.tuple = std::move(tuples[res.best_trial]);
  return res;
}

enum class MaxUpperStrategy { best, entrywise, svd };

/// x = alpha diag(e_{t_l}) beta; the MAX norm is at most ||alpha|| ||beta||.
struct L1Factorization {
  CMatrix alpha;                  // n x N
  std::vector<std::size_t> coord;  // t_l
  CMatrix beta;                   // N x n
  std::string strategy;

  std::vector<CMatrix> components(std::size_t k, Eigen::Index n) const {
    std::vector<CMatrix> out(k, CMatrix::Zero(n, n));
    for (std::size_t l = 0; l < coord.size(); ++l) {
      const auto c = static_cast<Eigen::Index>(l);
      out.at(coord[l]) += alpha.col(c) * beta.row(c);
    }
    return out;
  }
  double residual(const L1MatrixElement& x) const {
    const auto got = components(x.k(), static_cast<Eigen::Index>(x.n()));
    double r = 0.0;
    for (std::size_t t = 0; t < x.k(); ++t) r = std::max(r, (got[t] - x.components[t]).cwiseAbs().maxCoeff());
    return r;
  }
  double bound() const { return coord.empty() ? 0.0 : spectral_norm(alpha) * spectral_norm(beta); }
};

struct MaxUpperResult {
  double value = 0.0;
  L1Factorization factorization;
  double residual = 0.0;
};

namespace detail {

// Rank-one pieces a_l b_l grouped by coordinate, scaled per coordinate by
// the diagonal rebalancing used for molecules.
inline L1Factorization l1_pieces(const L1MatrixElement& x, bool entrywise, int rebalance_iters) {
  const auto n = static_cast<Eigen::Index>(x.n());
  std::vector<CVector> as, bs;
  std::vector<std::size_t> coord;
  std::vector<CMatrix> gp, gq;
  std::vector<std::size_t> group_of;
  for (std::size_t t = 0; t < x.k(); ++t) {
    const CMatrix& w = x.components[t];
    const std::size_t first = as.size();
    if (entrywise) {
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          const Complex z = w(i, j);
          if (z == Complex(0.0)) continue;
          const double r = std::sqrt(std::abs(z));
          as.push_back(r * CVector::Unit(n, i));
          bs.push_back((z / r) * CVector::Unit(n, j));
        }
    } else {
      const Svd s = svd(w);
      for (Eigen::Index c = 0; c < s.sigma.size(); ++c) {
        if (s.sigma(c) <= 1e-15 * s.sigma(0) || s.sigma(c) == 0.0) break;
        const double r = std::sqrt(s.sigma(c));
        as.push_back(r * s.u.col(c));
        bs.push_back(r * s.v.col(c).conjugate());
      }
    }
    if (as.size() == first) continue;
    CMatrix p = CMatrix::Zero(n, n), q = CMatrix::Zero(n, n);
    for (std::size_t l = first; l < as.size(); ++l) {
      p += as[l] * as[l].adjoint();
      q += bs[l].conjugate() * bs[l].transpose();
      coord.push_back(t);
      group_of.push_back(gp.size());
    }
    gp.push_back(std::move(p));
    gq.push_back(std::move(q));
  }
  L1Factorization f;
  f.strategy = entrywise ? "entrywise" : "svd";
  f.alpha = CMatrix::Zero(n, static_cast<Eigen::Index>(as.size()));
  f.beta = CMatrix::Zero(static_cast<Eigen::Index>(as.size()), n);
  f.coord = std::move(coord);
  const auto y = rebalance(gp, gq, rebalance_iters);
  for (std::size_t l = 0; l < as.size(); ++l) {
    const double sc = std::exp(y.empty() ? 0.0 : y[group_of[l]]);
    const auto c = static_cast<Eigen::Index>(l);
    f.alpha.col(c) = sc * as[l];
    f.beta.row(c) = bs[l].transpose() / sc;
  }
  return f;
}

}  // namespace detail

/// Certified upper bound for the MAX(l1^k) norm from an explicit
/// factorization through diagonal matrices of unit coordinate vectors.
inline MaxUpperResult maxl1_upper(const L1MatrixElement& x, MaxUpperStrategy strategy = MaxUpperStrategy::best,
                                  int rebalance_iters = 200) {
  double scale = 0.0;
  for (const auto& m : x.components) scale = std::max(scale, m.cwiseAbs().maxCoeff());
  const double tol = kReconstructTol * std::max(1.0, scale);
  MaxUpperResult best;
  best.value = std::numeric_limits<double>::infinity();
  auto consider = [&](L1Factorization f) {
    const double r = f.residual(x);
    if (!(r <= tol)) throw InternalError("l1 factorization does not reconstruct its element");
    const double v = f.bound();
    if (v < best.value) {
      best = {v, std::move(f), r};
    }
  };
  if (strategy != MaxUpperStrategy::svd) consider(detail::l1_pieces(x, true, rebalance_iters));
  if (strategy != MaxUpperStrategy::entrywise) consider(detail::l1_pieces(x, false, rebalance_iters));
  return best;
}

/// Vertices 0..k with parent[0] = 0 as the root; weights[j] is the length of
/// the edge from j to its parent (weights[0] is unused).
struct RootedTree {
  std::vector<std::size_t> parent;
  std::vector<double> weights;

  static RootedTree path(std::size_t k) {
    RootedTree t;
    for (std::size_t j = 0; j <= k; ++j) t.parent.push_back(j == 0 ? 0 : j - 1);
    return t;
  }
  static RootedTree star(std::size_t k) {
    RootedTree t;
    t.parent.assign(k + 1, 0);
    return t;
  }

  std::size_t k() const noexcept { return parent.empty() ? 0 : parent.size() - 1; }
  double weight(std::size_t j) const { return weights.empty() ? 1.0 : weights.at(j); }

  void validate() const {
    if (parent.size() < 2) throw InvalidInput("tree needs at least one edge");
    if (parent[0] != 0) throw InvalidInput("the root must be vertex 0 with parent 0");
    if (!weights.empty() && weights.size() != parent.size()) throw InvalidInput("one weight per vertex is required");
    for (std::size_t j = 1; j < parent.size(); ++j) {
      if (parent[j] >= parent.size()) throw InvalidInput("parent index out of range");
      if (parent[j] == j) throw InvalidInput("vertex " + std::to_string(j) + " is its own parent");
      if (!(weight(j) > 0.0) || !std::isfinite(weight(j))) throw InvalidInput("edge weights must be positive");
      std::size_t v = j;
      for (std::size_t hops = 0; v != 0; ++hops) {
        if (hops > parent.size()) throw InvalidInput("parent array has a cycle");
        v = parent[v];
      }
    }
  }

  /// Vertices on the path from the root to j, root excluded.
  std::vector<std::size_t> ancestors(std::size_t j) const {
    std::vector<std::size_t> out;
    for (; j != 0; j = parent[j]) out.push_back(j);
    return out;
  }

  /// Shortest-path distance.
  double distance(std::size_t a, std::size_t b) const {
    const auto pa = ancestors(a), pb = ancestors(b);
    std::vector<bool> on_a(parent.size(), false);
    for (auto v : pa) on_a[v] = true;
    double d = 0.0;
    std::size_t lca = 0;
    for (auto v : pb) {
      if (on_a[v]) {
        lca = v;
        break;
      }
      d += weight(v);
    }
    for (auto v : pa) {
      if (v == lca) break;
      d += weight(v);
    }
    return d;
  }
};

/// j -> sum over the root path of w_i e_i (e_i indexed by the vertex i - 1),
/// the root -> 0. Throws InternalError if l1 distances miss the tree metric.
inline std::vector<Eigen::VectorXd> tree_to_l1(const RootedTree& tree) {
  tree.validate();
  const std::size_t k = tree.k();
  std::vector<Eigen::VectorXd> table(k + 1, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k)));
  for (std::size_t j = 1; j <= k; ++j)
    for (auto i : tree.ancestors(j)) table[j](static_cast<Eigen::Index>(i - 1)) = tree.weight(i);
  for (std::size_t a = 0; a <= k; ++a)
    for (std::size_t b = 0; b <= k; ++b) {
      const double l1 = (table[a] - table[b]).lpNorm<1>();
      const double d = tree.distance(a, b);
      if (std::abs(l1 - d) > 1e-12 * std::max(1.0, d)) throw InternalError("tree embedding is not isometric");
    }
  return table;
}

/// The image u(mu) = sum_x A_x (x) coord(x) in M_m(l1^k).
inline L1MatrixElement tree_image(const MatrixMolecule& mu, const std::vector<Eigen::VectorXd>& table) {
  const std::size_t k = static_cast<std::size_t>(table.at(0).size());
  const auto m = static_cast<Eigen::Index>(mu.size());
  std::vector<CMatrix> comp(k, CMatrix::Zero(m, m));
  for (PointId x : mu.support()) {
    if (x >= table.size()) throw InvalidInput("molecule refers to a vertex outside the tree");
    const CMatrix a = mu.coefficient(x);
    for (std::size_t t = 0; t < k; ++t)
      if (table[x](static_cast<Eigen::Index>(t)) != 0.0) comp[t] += table[x](static_cast<Eigen::Index>(t)) * a;
  }
  return L1MatrixElement(std::move(comp));
}

/// Tree vertices as block-diagonal matrices: vertex j is the direct sum over
/// the family of sum_t coord_t(j) u_t. Every level-n distance is a lower
/// bound for the MAX(l1^k) distance, with equality on the family's tuples.
inline std::shared_ptr<const OperatorMetricSpace> tree_operator_space(
    const RootedTree& tree, const std::vector<std::vector<CMatrix>>& family) {
  const auto table = tree_to_l1(tree);
  const std::size_t k = tree.k();
  Eigen::Index dim = 0;
  for (const auto& tup : family) {
    if (tup.size() != k) throw InvalidInput("family tuple length differs from the tree size");
    dim += tup[0].rows();
  }
  if (dim == 0) throw InvalidInput("tuple family is empty");
  std::vector<CMatrix> pts;
  std::vector<std::string> names;
  for (std::size_t j = 0; j <= k; ++j) {
    CMatrix p = CMatrix::Zero(dim, dim);
    Eigen::Index off = 0;
    for (const auto& tup : family) {
      const auto s = tup[0].rows();
      for (std::size_t t = 0; t < k; ++t) p.block(off, off, s, s) += table[j](static_cast<Eigen::Index>(t)) * tup[t];
      off += s;
    }
    pts.push_back(std::move(p));
    names.push_back("v" + std::to_string(j));
  }
  return std::make_shared<const OperatorMetricSpace>(std::move(pts), std::move(names));
}

/// The +-1 scalar tuples with a leading +1; these realize the l1 norm of
/// every real coordinate difference.
inline std::vector<std::vector<CMatrix>> sign_tuples(std::size_t k) {
  std::vector<std::vector<CMatrix>> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << (k - 1)); ++mask) {
    std::vector<CMatrix> tup;
    for (std::size_t t = 0; t < k; ++t)
      tup.push_back(CMatrix::Constant(1, 1, t > 0 && ((mask >> (t - 1)) & 1) ? -1.0 : 1.0));
    out.push_back(std::move(tup));
  }
  return out;
}

struct TreeCheckOptions {
  std::size_t samples = 10;
  std::vector<MatrixMolecule> molecules;  // checked instead of random samples when given
  std::uint64_t seed = 0;
  std::size_t random_tuples = 2;  // extra unitary tuples of size n in the family
  double max_mismatch = 0.1;
  bool stop_at_max_lower = true;  // end the dual once it certifies the MAX lower bound
  MaxLowerOptions max_lower{};
  BracketOptions bracket{};
};

struct TreeSample {
  MatrixMolecule molecule;
  L1MatrixElement image;
  NormBracket free_bracket;
  double max_lower = 0.0;
  double max_upper = 0.0;
  bool overlap = false;
  double mismatch = 0.0;
  bool pass = false;
};

struct TreeCheckReport {
  std::size_t n = 1;
  std::size_t family_size = 0;
  std::size_t ambient_dim = 0;
  std::size_t size_cap = 0;
  std::vector<TreeSample> samples;
  double max_mismatch = 0.0;
  bool pass = false;
};

/// max(|lower_F - lower_MAX|, |upper_F - upper_MAX|) over the larger upper.
inline double bracket_mismatch(double lf, double uf, double lm, double um) {
  const double scale = std::max(uf, um);
  if (scale == 0.0) return 0.0;
  return std::max(std::abs(lf - lm), std::abs(uf - um)) / scale;
}

/// Samples n x n matrix molecules on the tree (elementary molecules of random
/// grid pairs and random complex molecules), brackets each in F^n of the
/// surrogate space and in MAX(l1^k) through the image, and checks overlap.
inline TreeCheckReport tree_freespace_check(const RootedTree& tree, std::size_t n, const TreeCheckOptions& opts = {}) {
  if (n == 0) throw InvalidInput("level must be at least 1");
  const auto table = tree_to_l1(tree);
  const std::size_t k = tree.k(), points = k + 1;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<std::size_t> pick(0, points - 1);

  TreeCheckReport rep;
  rep.n = n;
  std::vector<MatrixMolecule> mols = opts.molecules;
  for (const auto& mu : mols)
    if (mu.size() != n) throw InvalidInput("tree check molecules must be n x n");
  for (std::size_t s = 0; s < opts.samples && opts.molecules.empty(); ++s) {
    if (s % 2 == 0) {
      MatrixPoint a = MatrixPoint::constant(n, 0), b = MatrixPoint::constant(n, 0);
      while (a.cells == b.cells)
        for (std::size_t c = 0; c < n * n; ++c) {
          a.cells[c] = static_cast<PointId>(pick(rng));
          b.cells[c] = static_cast<PointId>(pick(rng));
        }
      mols.push_back(MatrixMolecule::elementary(a, b));
    } else {
      MatrixMolecule mu(n);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t x = 1; x < points; ++x) mu.at(a, b).add(static_cast<PointId>(x), Complex(g(rng), g(rng)));
      mols.push_back(std::move(mu));
    }
  }

  std::vector<L1MatrixElement> images;
  std::vector<MaxLowerResult> lowers;
  auto family = sign_tuples(k);
  for (std::size_t r = 0; r < opts.random_tuples; ++r) {
    std::vector<CMatrix> tup;
    for (std::size_t t = 0; t < k; ++t) tup.push_back(detail::random_unitary(rng, static_cast<Eigen::Index>(n)));
    family.push_back(std::move(tup));
  }
  for (std::size_t s = 0; s < mols.size(); ++s) {
    images.push_back(tree_image(mols[s], table));
    MaxLowerOptions lo = opts.max_lower;
    lo.seed = opts.max_lower.seed + s;
    lowers.push_back(maxl1_lower(images.back(), lo));
    rep.size_cap = std::max(rep.size_cap, lowers.back().size_cap);
    if (n > 1 || lowers.back().tuple[0].rows() > 1) family.push_back(lowers.back().tuple);
  }
  const auto space = tree_operator_space(tree, family);
  rep.family_size = family.size();
  rep.ambient_dim = space->ambient_dim();
  const PairSet pairs = constraint_pairs(*space, n, opts.bracket.pairs, opts.bracket.budget);

  // The point map itself is completely contractive, so it seeds the dual.
  BracketOptions bo = opts.bracket;
  bo.dual.seeds.push_back(MatrixLipFunction(space->ambient_dim(), space->points()));

  rep.pass = true;
  for (std::size_t s = 0; s < mols.size(); ++s) {
    TreeSample smp;
    smp.molecule = mols[s];
    smp.image = images[s];
    smp.max_lower = lowers[s].value;
    smp.max_upper = maxl1_upper(images[s]).value;
    if (opts.stop_at_max_lower) bo.dual.target = smp.max_lower;
    smp.free_bracket = norm_bracket(mols[s], *space, pairs, bo);
    const double lo = std::max(smp.free_bracket.lower, smp.max_lower);
    const double hi = std::min(smp.free_bracket.upper, smp.max_upper);
    smp.overlap = lo <= hi + kWeakDualityTol * std::max(1.0, hi);
    smp.mismatch = bracket_mismatch(smp.free_bracket.lower, smp.free_bracket.upper, smp.max_lower, smp.max_upper);
    smp.pass = smp.overlap && smp.mismatch <= opts.max_mismatch;
    rep.max_mismatch = std::max(rep.max_mismatch, smp.mismatch);
    rep.pass = rep.pass && smp.pass;
    rep.samples.push_back(std::move(smp));
  }
  return rep;
}

}  // namespace opfree

#endif  // OPFREE_MAXMODEL_HPP
