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

#ifndef OPFREE_FREENORM_HPP
#define OPFREE_FREENORM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "opfree/barrier.hpp"
#include "opfree/molecule.hpp"
#include "opfree/transport.hpp"

namespace opfree {

inline constexpr double kReconstructTol = 1e-10;
inline constexpr double kWeakDualityTol = 1e-9;

struct FactorBlock {
  Complex c;
  MatrixPoint a;
  MatrixPoint b;
};

/// mu = alpha * diag(c_l [delta_{a_ij} - delta_{b_ij}]) * beta, with the
/// diagonal blocks n x n. alpha is m x (N n), beta is (N n) x m.
struct Factorization {
  std::size_t m = 1;
  std::size_t n = 1;
  CMatrix alpha;
  std::vector<FactorBlock> blocks;
  CMatrix beta;
  std::string strategy;

  static Factorization empty(std::size_t m, std::size_t n) {
    const auto mm = static_cast<Eigen::Index>(m);
    return {m, n, CMatrix(mm, 0), {}, CMatrix(0, mm), "zero"};
  }

  /// Coefficient matrices A_x of the reconstructed molecule (A_0 left zero).
  std::vector<CMatrix> coefficients(std::size_t points) const {
    const auto mm = static_cast<Eigen::Index>(m);
    std::vector<CMatrix> out(points, CMatrix::Zero(mm, mm));
    for (std::size_t l = 0; l < blocks.size(); ++l) {
      const auto& blk = blocks[l];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const PointId p = blk.a.at(i, j), q = blk.b.at(i, j);
          if (p == q) continue;
          const auto col = static_cast<Eigen::Index>(l * n + i), row = static_cast<Eigen::Index>(l * n + j);
          const CMatrix outer = blk.c * alpha.col(col) * beta.row(row);
          if (p >= points || q >= points) throw InvalidInput("factorization refers to a point outside the space");
          out[p] += outer;
          out[q] -= outer;
        }
    }
    out[0].setZero();
    return out;
  }

  MatrixMolecule reconstruct(std::size_t points) const {
    const auto coef = coefficients(points);
    MatrixMolecule mu(m);
    for (std::size_t x = 1; x < points; ++x)
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
          mu.at(a, b).add(static_cast<PointId>(x), coef[x](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    return mu;
  }

  /// Largest coefficient gap to `target`.
  double residual(const MatrixMolecule& target, std::size_t points) const {
    if (target.size() != m) throw InvalidInput("factorization and molecule sizes differ");
    const auto coef = coefficients(points);
    double r = 0.0;
    for (std::size_t x = 1; x < points; ++x)
      r = std::max(r, (coef[x] - target.coefficient(static_cast<PointId>(x))).cwiseAbs().maxCoeff());
    return r;
  }

  /// ||alpha|| ||beta|| max_l |c_l| d_n(a_l, b_l).
  double bound(const OperatorMetricSpace& x) const {
    if (blocks.empty()) return 0.0;
    double dmax = 0.0;
    for (const auto& blk : blocks) dmax = std::max(dmax, std::abs(blk.c) * amplified_distance(x, blk.a, blk.b));
    return spectral_norm(alpha) * spectral_norm(beta) * dmax;
  }

  Factorization scaled(Complex c) const {
    Factorization f = *this;
    f.alpha *= c;
    return f;
  }
};

namespace detail {

// A flow term w (delta_p - delta_q) with w an m x m matrix.
struct EdgeFlow {
  PointId p;
  PointId q;
  CMatrix w;
};

inline std::vector<CMatrix> coefficient_table(const MatrixMolecule& mu, std::size_t points) {
  std::vector<CMatrix> a;
  a.reserve(points);
  for (std::size_t x = 0; x < points; ++x) a.push_back(mu.coefficient(static_cast<PointId>(x)));
  a[0].setZero();
  return a;
}

// Rooted spanning tree by Prim's algorithm on a complete graph; parent[0] = 0.
template <typename Weight>
std::vector<PointId> prim_tree(std::size_t points, Weight&& weight) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<PointId> parent(points, 0);
  std::vector<double> best(points, inf);
  std::vector<char> done(points, 0);
  best[0] = 0.0;
  for (std::size_t it = 0; it < points; ++it) {
    std::size_t u = points;
    for (std::size_t v = 0; v < points; ++v)
      if (!done[v] && (u == points || best[v] < best[u])) u = v;
    done[u] = 1;
    for (std::size_t v = 0; v < points; ++v) {
      if (done[v]) continue;
      const double w = weight(u, v);
      if (w < best[v]) {
        best[v] = w;
        parent[v] = static_cast<PointId>(u);
      }
    }
  }
  return parent;
}

// Flows along a rooted tree: the edge above x carries the total coefficient
// of the subtree at x.
inline std::vector<EdgeFlow> tree_flows(const std::vector<CMatrix>& coef, const std::vector<PointId>& parent) {
  const std::size_t points = coef.size();
  std::vector<std::vector<PointId>> children(points);
  for (std::size_t x = 1; x < points; ++x) children[parent[x]].push_back(static_cast<PointId>(x));
  std::vector<PointId> order{0};
  for (std::size_t i = 0; i < order.size(); ++i)
    for (PointId c : children[order[i]]) order.push_back(c);
  if (order.size() != points) throw InvalidInput("parent array does not describe a tree rooted at the basepoint");
  std::vector<CMatrix> sub = coef;
  for (std::size_t i = order.size(); i-- > 1;) sub[parent[order[i]]] += sub[order[i]];
  std::vector<EdgeFlow> flows;
  for (std::size_t x = 1; x < points; ++x)
    if (!sub[x].isZero(0.0)) flows.push_back({static_cast<PointId>(x), parent[x], sub[x]});
  return flows;
}

// Entrywise optimal transport, real and imaginary parts separately, grouped
// by edge.
inline std::vector<EdgeFlow> transport_flows(const MatrixMolecule& mu, const OperatorMetricSpace& x,
                                             const std::vector<double>& dist) {
  const std::size_t m = mu.size();
  const auto mm = static_cast<Eigen::Index>(m);
  std::map<std::pair<PointId, PointId>, CMatrix> edges;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (int part = 0; part < 2; ++part) {
        Molecule piece;
        for (const auto& [p, v] : mu.at(a, b).terms()) piece.add(p, part == 0 ? v.real() : v.imag());
        if (piece.empty()) continue;
        const Complex unit = part == 0 ? Complex(1.0) : Complex(0.0, 1.0);
        for (const auto& f : kantorovich_plan(piece, x, dist).flows) {
          const bool swap = f.from > f.to;
          const auto key = swap ? std::make_pair(f.to, f.from) : std::make_pair(f.from, f.to);
          auto [it, fresh] = edges.try_emplace(key, CMatrix::Zero(mm, mm));
          it->second(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += (swap ? -f.amount : f.amount) * unit;
        }
      }
  std::vector<EdgeFlow> flows;
  for (auto& [key, w] : edges) flows.push_back({key.first, key.second, std::move(w)});
  return flows;
}

// Largest eigenvalue and eigenvector of a Hermitian matrix.
inline std::pair<double, CVector> top_eigen(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const auto last = h.rows() - 1;
  return {es.eigenvalues()(last), es.eigenvectors().col(last)};
}

// Scales alpha_g by e^{y_g} and beta_g by e^{-y_g} per group to reduce
// ||sum e^{2y} P_g|| ||sum e^{-2y} Q_g||; any accepted step keeps the
// reconstruction exact.
inline std::vector<double> rebalance(const std::vector<CMatrix>& p, const std::vector<CMatrix>& q, int iters) {
  const std::size_t g = p.size();
  std::vector<double> y(g, 0.0);
  if (g < 2 || iters <= 0) return y;
  auto objective = [&](const std::vector<double>& yy, CMatrix& sp, CMatrix& sq) {
    sp = CMatrix::Zero(p[0].rows(), p[0].cols());
    sq = CMatrix::Zero(q[0].rows(), q[0].cols());
    for (std::size_t i = 0; i < g; ++i) {
      sp += std::exp(2 * yy[i]) * p[i];
      sq += std::exp(-2 * yy[i]) * q[i];
    }
    return std::log(top_eigen(sp).first) + std::log(top_eigen(sq).first);
  };
  CMatrix sp, sq;
  double cur = objective(y, sp, sq);
  double step = 0.5;
  for (int it = 0; it < iters && step > 1e-8; ++it) {
    const auto [lp, up] = top_eigen(sp);
    const auto [lq, uq] = top_eigen(sq);
    std::vector<double> grad(g);
    double gn = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
      grad[i] = 2 * std::exp(2 * y[i]) * up.dot(p[i] * up).real() / lp -
                2 * std::exp(-2 * y[i]) * uq.dot(q[i] * uq).real() / lq;
      gn = std::max(gn, std::abs(grad[i]));
    }
    if (gn < 1e-12) break;
    bool moved = false;
    while (step > 1e-8) {
      std::vector<double> cand(g);
      for (std::size_t i = 0; i < g; ++i) cand[i] = y[i] - step * grad[i] / gn;
      CMatrix cp, cq;
      const double v = objective(cand, cp, cq);
      if (v < cur - 1e-14) {
        y = std::move(cand);
        cur = v;
        sp = std::move(cp);
        sq = std::move(cq);
        moved = true;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return y;
}

// Factorization from flows: each flow w (delta_p - delta_q) is split by its
// singular value decomposition into diagonal-grid blocks of rank <= n.
inline Factorization flow_factorization(const std::vector<EdgeFlow>& flows, const OperatorMetricSpace& x,
                                        std::size_t m, std::size_t n, int rebalance_iters, std::string name) {
  Factorization f = Factorization::empty(m, n);
  f.strategy = std::move(name);
  const auto mm = static_cast<Eigen::Index>(m);
  const auto nn = static_cast<Eigen::Index>(n);
  struct Piece {
    std::size_t group;
    FactorBlock block;
    CMatrix a;  // m x n
    CMatrix b;  // n x m
  };
  std::vector<Piece> pieces;
  std::vector<CMatrix> gp, gq;
  for (const auto& fl : flows) {
    if (fl.p == fl.q) continue;
    const double d = spectral_norm(x.point(fl.p) - x.point(fl.q));
    const Svd s = svd(fl.w);
    if (s.sigma.size() == 0 || s.sigma(0) == 0.0) continue;
    Eigen::Index rank = 0;
    while (rank < s.sigma.size() && s.sigma(rank) > 1e-15 * s.sigma(0)) ++rank;
    const std::size_t group = gp.size();
    gp.push_back(CMatrix::Zero(mm, mm));
    gq.push_back(CMatrix::Zero(mm, mm));
    for (Eigen::Index c0 = 0; c0 < rank; c0 += nn) {
      const Eigen::Index r = std::min(nn, rank - c0);
      MatrixPoint ga = MatrixPoint::constant(n, 0), gb = MatrixPoint::constant(n, 0);
      for (Eigen::Index i = 0; i < r; ++i) {
        ga.cells[static_cast<std::size_t>(i * nn + i)] = fl.p;
        gb.cells[static_cast<std::size_t>(i * nn + i)] = fl.q;
      }
      CMatrix a = CMatrix::Zero(mm, nn), b = CMatrix::Zero(nn, mm);
      for (Eigen::Index i = 0; i < r; ++i) {
        const double root = std::sqrt(s.sigma(c0 + i) * d);
        a.col(i) = root * s.u.col(c0 + i);
        b.row(i) = root * s.v.col(c0 + i).adjoint();
      }
      gp[group] += a * a.adjoint();
      gq[group] += b.adjoint() * b;
      pieces.push_back({group, {Complex(1.0 / d), std::move(ga), std::move(gb)}, std::move(a), std::move(b)});
    }
  }
  if (pieces.empty()) return f;
  const auto y = rebalance(gp, gq, rebalance_iters);
  const auto total = static_cast<Eigen::Index>(pieces.size()) * nn;
  f.alpha = CMatrix::Zero(mm, total);
  f.beta = CMatrix::Zero(total, mm);
  for (std::size_t l = 0; l < pieces.size(); ++l) {
    const double s = std::exp(y[pieces[l].group]);
    f.alpha.middleCols(static_cast<Eigen::Index>(l) * nn, nn) = s * pieces[l].a;
    f.beta.middleRows(static_cast<Eigen::Index>(l) * nn, nn) = pieces[l].b / s;
    f.blocks.push_back(std::move(pieces[l].block));
  }
  return f;
}

// mu = c [delta_{a_ij} - delta_{b_ij}] for an m x m grid with m <= n, padded
// into level n by equal cells. Each entry may carry either orientation.
inline std::optional<Factorization> elementary_factorization(const MatrixMolecule& mu, std::size_t n) {
  const std::size_t m = mu.size();
  if (m > n) return std::nullopt;
  std::optional<Complex> c;
  MatrixPoint ga = MatrixPoint::constant(n, 0), gb = MatrixPoint::constant(n, 0);
  auto close = [](Complex u, Complex v) { return std::abs(u - v) <= 1e-14 * std::max(std::abs(u), std::abs(v)); };
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      const auto& terms = mu.at(a, b).terms();
      if (terms.empty()) continue;
      if (terms.size() > 2) return std::nullopt;
      auto it = terms.begin();
      PointId p = it->first, q = 0;
      Complex v = it->second;
      if (terms.size() == 2) {
        const auto second = std::next(it);
        if (!close(second->second, -v)) return std::nullopt;
        q = second->first;
      }
      if (!c) c = v;
      if (close(v, -*c)) {
        std::swap(p, q);
      } else if (!close(v, *c)) {
        return std::nullopt;
      }
      ga.cells[a * n + b] = p;
      gb.cells[a * n + b] = q;
    }
  if (!c) return std::nullopt;
  const auto mm = static_cast<Eigen::Index>(m), nn = static_cast<Eigen::Index>(n);
  Factorization f;
  f.m = m;
  f.n = n;
  f.alpha = CMatrix::Identity(mm, nn);
  f.beta = CMatrix::Identity(nn, mm);
  f.blocks.push_back({*c, std::move(ga), std::move(gb)});
  f.strategy = "elementary";
  return f;
}

}  // namespace detail

struct PrimalOptions {
  int random_trees = 4;
  int rebalance_iters = 200;
  bool transport = true;  // entrywise transport flows (|X| <= 64)
  std::uint64_t seed = 0;
};

struct PrimalResult {
  double value = 0.0;
  Factorization factorization;
  double residual = 0.0;
  std::size_t candidates = 0;
};

/// Certified upper bound: the best of several reconstructing factorizations.
/// Candidates whose residual exceeds 1e-10 max(1, max |coefficient|) are
/// discarded; the elementary candidate is tried first, then tree flows
/// (star, minimum spanning tree, seeded random trees) and entrywise
/// transport flows, each followed by diagonal rebalancing.
inline PrimalResult primal_norm_upper(const MatrixMolecule& mu, const OperatorMetricSpace& x, std::size_t n,
                                      const PrimalOptions& opts = {}) {
  if (n == 0) throw InvalidInput("level must be at least 1");
  mu.check(x);
  const std::size_t m = mu.size(), points = x.size();
  PrimalResult best;
  best.factorization = Factorization::empty(m, n);
  if (mu.empty()) return best;

  const double tol = kReconstructTol * std::max(1.0, mu.max_abs());
  best.value = std::numeric_limits<double>::infinity();
  auto consider = [&](Factorization f) {
    ++best.candidates;
    const double r = f.residual(mu, points);
    if (!(r <= tol)) return;
    const double v = f.bound(x);
    if (v < best.value) {
      best.value = v;
      best.residual = r;
      best.factorization = std::move(f);
    }
  };

  if (auto e = detail::elementary_factorization(mu, n)) consider(std::move(*e));
  const auto coef = detail::coefficient_table(mu, points);
  const auto dist = level_one_distances(x);
  auto tree = [&](const std::vector<PointId>& parent, const std::string& name) {
    consider(detail::flow_factorization(detail::tree_flows(coef, parent), x, m, n, opts.rebalance_iters, name));
  };
  tree(std::vector<PointId>(points, 0), "star");
  tree(detail::prim_tree(points, [&](std::size_t p, std::size_t q) { return dist[p * points + q]; }), "mst");
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> g;
  for (int t = 0; t < opts.random_trees; ++t) {
    std::vector<double> noise(points * points);
    for (std::size_t p = 0; p < points; ++p)
      for (std::size_t q = p; q < points; ++q) noise[p * points + q] = noise[q * points + p] = std::exp(0.5 * g(rng));
    tree(detail::prim_tree(points, [&](std::size_t p, std::size_t q) { return dist[p * points + q] * noise[p * points + q]; }),
         "tree" + std::to_string(t));
  }
  if (opts.transport && points <= kTransportMaxPoints)
    consider(detail::flow_factorization(detail::transport_flows(mu, x, dist), x, m, n, opts.rebalance_iters, "transport"));

  if (!std::isfinite(best.value)) throw InternalError("no reconstructing factorization was found");
  return best;
}

/// Compression of X to the span K of the block components of the top
/// singular pair of sum_x A_x (x) (x - x0): F(x) = Q^*(x - x0)Q with Q an
/// orthonormal basis of K, truncated to k_cap columns. Completely
/// contractive, so feasible, and exact (pairing norm = the singular value)
/// when dim K <= k_cap.
inline MatrixLipFunction molecule_compression_witness(const MatrixMolecule& mu, const OperatorMetricSpace& x,
                                                      std::size_t k_cap) {
  const std::size_t m = mu.size(), points = x.size();
  const auto d = static_cast<Eigen::Index>(x.ambient_dim());
  const auto mm = static_cast<Eigen::Index>(m);
  CMatrix s = CMatrix::Zero(mm * d, mm * d);
  for (std::size_t p = 1; p < points; ++p) {
    const CMatrix a = mu.coefficient(static_cast<PointId>(p));
    if (a.isZero(0.0)) continue;
    const CMatrix shifted = x.point(p) - x.point(0);
    for (Eigen::Index i = 0; i < mm; ++i)
      for (Eigen::Index j = 0; j < mm; ++j)
        if (a(i, j) != Complex(0.0)) s.block(i * d, j * d, d, d) += a(i, j) * shifted;
  }
  const SingularPair sp = top_singular_pair(s);
  CMatrix cols(d, 2 * mm);
  for (Eigen::Index a = 0; a < mm; ++a) {
    cols.col(a) = sp.left.segment(a * d, d);
    cols.col(mm + a) = sp.right.segment(a * d, d);
  }
  CMatrix q = orthonormal_basis(cols);
  if (static_cast<std::size_t>(q.cols()) > k_cap) q = q.leftCols(static_cast<Eigen::Index>(k_cap)).eval();
  std::vector<CMatrix> vals;
  vals.reserve(points);
  for (std::size_t p = 0; p < points; ++p) vals.push_back(q.adjoint() * (x.point(p) - x.point(0)) * q);
  vals[0].setZero();
  return {static_cast<std::size_t>(q.cols()), std::move(vals)};
}

/// The compression witness of the elementary molecule [delta_{a_ij} - delta_{b_ij}].
inline MatrixLipFunction compression_witness(const OperatorMetricSpace& x, const MatrixPoint& a,
                                             const MatrixPoint& b) {
  if (a.n != b.n) throw InvalidInput("compression_witness: level mismatch");
  if (amplified_distance(x, a, b) == 0.0) throw DegenerateInput("compression_witness needs distinct grids");
  return molecule_compression_witness(MatrixMolecule::elementary(a, b), x, 2 * a.n);
}

struct DualOptions {
  std::size_t k_max = 0;  // 0 selects 2n
  int ascent_rounds = 25;
  int random_starts = 1;
  std::uint64_t seed = 0;
  double target = std::numeric_limits<double>::infinity();  // stop once reached
  std::vector<MatrixLipFunction> seeds;                      // extra starting witnesses
  BarrierOptions barrier{};
};

struct DualResult {
  double value = 0.0;
  MatrixLipFunction witness;
  std::size_t k = 1;
  int ascent_steps = 0;
  int barrier_solves = 0;
  int newton_steps = 0;
  std::size_t constraints = 0;
  bool stalled = false;
  std::string diagnostic;
};

namespace detail {

struct Candidate {
  double value = -1.0;
  MatrixLipFunction f;
};

// ||pairing(f)|| after rescaling f into the ball of the pair table.
inline Candidate certify(const MatrixMolecule& mu, MatrixLipFunction f, const PairSet& pairs) {
  const double lip = lip_constant(f, pairs).value;
  if (lip > 1.0) f = f.scaled(1.0 / lip);
  Candidate c;
  c.value = spectral_norm(mu.pairing(f));
  c.f = std::move(f);
  return c;
}

// Weights of Re u^* (sum A_x (x) F(x)) v as a linear functional of F.
inline std::vector<CMatrix> ascent_weights(const std::vector<CMatrix>& coef, std::size_t k, const CVector& u,
                                           const CVector& v) {
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::Index m = coef.empty() ? 0 : coef[0].rows();
  std::vector<CMatrix> w(coef.size(), CMatrix::Zero(kk, kk));
  for (std::size_t x = 1; x < coef.size(); ++x)
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) {
        const Complex c = coef[x](a, b);
        if (c == Complex(0.0)) continue;
        for (Eigen::Index r = 0; r < kk; ++r)
          for (Eigen::Index s = 0; s < kk; ++s) w[x](r, s) += std::conj(u(a * kk + r)) * c * v(b * kk + s);
      }
  return w;
}

}  // namespace detail

/// Lower bound for ||mu|| in M_m(F^n(X)) from feasible matrix functions.
/// Scalar molecules (m = 1) are solved exactly by one barrier solve; for
/// m > 1 the sup over k x k functions is approached by alternating a top
/// singular pair with a barrier solve, which never decreases the value.
inline DualResult dual_norm_lower(const MatrixMolecule& mu, const OperatorMetricSpace& x, const PairSet& pairs,
                                  const DualOptions& opts = {}) {
  mu.check(x);
  if (pairs.point_count() != x.size()) throw InvalidInput("pair set is over a different space");
  const std::size_t m = mu.size(), points = x.size(), n = pairs.level();
  const std::size_t k_max = opts.k_max ? opts.k_max : 2 * n;
  DualResult res;
  res.witness = MatrixLipFunction::zero(points, 1);
  if (mu.empty()) return res;

  detail::Candidate best;
  auto offer = [&](detail::Candidate c) {
    if (c.value > best.value) best = std::move(c);
  };
  auto reached = [&] { return best.value >= opts.target * (1 - 1e-12); };
  if (x.ambient_dim() <= k_max) {
    std::vector<CMatrix> vals;
    for (std::size_t p = 0; p < points; ++p) vals.push_back(x.point(p) - x.point(0));
    offer(detail::certify(mu, MatrixLipFunction(x.ambient_dim(), std::move(vals)), pairs));
  }
  offer(detail::certify(mu, molecule_compression_witness(mu, x, k_max), pairs));
  for (const auto& s : opts.seeds) {
    if (s.size() != points) throw InvalidInput("seed witness is over a different space");
    if (s.k() <= k_max) offer(detail::certify(mu, s, pairs));
  }

  const auto coef = detail::coefficient_table(mu, points);
  std::vector<std::size_t> working;  // carried between solves
  auto solve = [&](std::size_t k, const std::vector<CMatrix>& w) {
    auto r = barrier_maximize(pairs, k, w, opts.barrier, working);
    working = std::move(r.working_set);
    ++res.barrier_solves;
    res.newton_steps += r.newton_steps;
    res.constraints = std::max(res.constraints, r.constraints);
    if (r.stalled) {
      res.stalled = true;
      res.diagnostic = r.diagnostic;
    }
    return detail::certify(mu, std::move(r.witness), pairs);
  };

  if (!reached()) {
    if (m == 1) {
      offer(solve(1, coef));
    } else {
      auto climb = [&](detail::Candidate c) {
        for (int round = 0; round < opts.ascent_rounds; ++round) {
          const CMatrix pm = mu.pairing(c.f);
          if (pm.isZero(0.0)) break;
          const SingularPair sp = top_singular_pair(pm);
          auto next = solve(c.f.k(), detail::ascent_weights(coef, c.f.k(), sp.left, sp.right));
          ++res.ascent_steps;
          const bool better = next.value > c.value * (1 + 1e-9);
          if (next.value > c.value) c = std::move(next);
          offer(c);
          if (!better || reached()) break;
        }
      };
      climb(best);
      // Random starts keep the size of the best witness so far.
      std::mt19937_64 rng(opts.seed);
      std::normal_distribution<double> g;
      const std::size_t k = best.f.k();
      for (int s = 0; s < opts.random_starts && !reached(); ++s) {
        CVector u(static_cast<Eigen::Index>(m * k)), v(static_cast<Eigen::Index>(m * k));
        for (Eigen::Index i = 0; i < u.size(); ++i) {
          u(i) = Complex(g(rng), g(rng));
          v(i) = Complex(g(rng), g(rng));
        }
        climb(solve(k, detail::ascent_weights(coef, k, u.normalized(), v.normalized())));
      }
    }
  }
  res.value = best.value;
  res.k = best.f.k();
  res.witness = std::move(best.f);
  return res;
}

struct BracketOptions {
  PairMode pairs = PairMode::full();
  PairBudget budget{};
  DualOptions dual{};
  PrimalOptions primal{};
};

struct NormBracket {
  double lower = 0.0;
  double upper = 0.0;
  MatrixLipFunction lower_witness;
  Factorization upper_witness;
  bool sampled = false;
  bool certified = false;  // full pair table and exact reconstruction
  double gap = 0.0;
  std::size_t k_used = 1;
  std::uint64_t seed = 0;
  double residual = 0.0;
  int ascent_steps = 0;
  int barrier_solves = 0;
  int newton_steps = 0;
  std::size_t constraints = 0;
  bool stalled = false;
  std::string diagnostic;
};

/// Both sides for mu over a given pair table. The molecule is normalized
/// to unit largest coefficient (with a fixed phase) before solving and the
/// results are scaled back, so bracket(c mu) = |c| bracket(mu). Throws
/// InvariantViolation when a certified bracket has lower > upper + 1e-9 on
/// that normalized scale.
inline NormBracket norm_bracket(const MatrixMolecule& mu, const OperatorMetricSpace& x, const PairSet& pairs,
                                const BracketOptions& opts = {}) {
  mu.check(x);
  const std::size_t n = pairs.level();
  NormBracket out;
  out.seed = opts.dual.seed;
  out.sampled = pairs.sampled();
  out.lower_witness = MatrixLipFunction::zero(x.size(), 1);
  out.upper_witness = Factorization::empty(mu.size(), n);
  out.certified = !pairs.sampled();
  if (mu.empty()) return out;

  Complex gamma = 0.0;
  for (const auto& e : mu.entries())
    if (!e.empty()) {
      const Complex first = e.terms().begin()->second;
      gamma = mu.max_abs() * first / std::abs(first);
      break;
    }
  const MatrixMolecule canon = (1.0 / gamma) * mu;

  PrimalOptions popts = opts.primal;
  const auto primal = primal_norm_upper(canon, x, n, popts);
  DualOptions dopts = opts.dual;
  dopts.target = std::min(dopts.target / std::abs(gamma), primal.value);  // given in the units of mu
  const auto dual = dual_norm_lower(canon, x, pairs, dopts);

  if (out.certified && dual.value > primal.value + kWeakDualityTol)
    throw InvariantViolation("certified bracket violates weak duality: lower " + std::to_string(dual.value) +
                             " > upper " + std::to_string(primal.value));
  const double scale = std::abs(gamma);
  out.lower = dual.value * scale;
  out.upper = primal.value * scale;
  out.gap = out.upper - out.lower;
  out.lower_witness = dual.witness;
  out.upper_witness = primal.factorization.scaled(gamma);
  out.residual = primal.residual * scale;
  out.k_used = dual.k;
  out.ascent_steps = dual.ascent_steps;
  out.barrier_solves = dual.barrier_solves;
  out.newton_steps = dual.newton_steps;
  out.constraints = dual.constraints;
  out.stalled = dual.stalled;
  out.diagnostic = dual.diagnostic;
  return out;
}

inline NormBracket norm_bracket(const MatrixMolecule& mu, const OperatorMetricSpace& x, std::size_t n,
                                const BracketOptions& opts = {}) {
  return norm_bracket(mu, x, constraint_pairs(x, n, opts.pairs, opts.budget), opts);
}

}  // namespace opfree

#endif  // OPFREE_FREENORM_HPP
