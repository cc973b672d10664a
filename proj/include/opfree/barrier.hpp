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

#ifndef OPFREE_BARRIER_HPP
#define OPFREE_BARRIER_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "opfree/lipcalc.hpp"

namespace opfree {

// Maximizes Re sum_x <W_x, F(x)> (entrywise, unconjugated) over k x k matrix
// functions with ||[F(a_ij) - F(b_ij)]|| <= dist for every pair, using the
// log-det barrier -log det(dist^2 I - C^* C) and damped Newton steps.

struct BarrierOptions {
  double gap_tol = 1e-8;               // stop when nu / t <= gap_tol * max(|obj|, 1e-3)
  double t_factor = 10.0;
  int max_stages = 30;
  int max_newton = 500;                // per stage; exceeding it is a stall
  double newton_tol = 1e-9;            // on half the squared Newton decrement
  std::size_t working_threshold = 256;  // larger tables go through cutting planes
  int max_rounds = 40;
};

struct BarrierResult {
  MatrixLipFunction witness;  // feasible over the full pair table
  double objective = 0.0;     // Re sum <W_x, F(x)> at the witness
  double lip = 0.0;           // Lipschitz constant before the final rescale
  int newton_steps = 0;
  int stages = 0;
  int rounds = 0;
  std::size_t constraints = 0;  // final working-set size
  std::vector<std::size_t> working_set;  // pair indices of the final working set
  bool stalled = false;
  std::string diagnostic;
};

namespace detail {

struct PairTerms {
  double dist = 0.0;
  std::vector<std::uint32_t> vars;     // variable points (point id - 1), increasing
  std::vector<std::uint32_t> offsets;  // cells of vars[v] are [offsets[v], offsets[v+1])
  std::vector<std::array<int, 3>> cells;  // (row block, column block, sign)
};

inline PairTerms pair_terms(const PairSet& pairs, std::size_t p, double scale) {
  const std::size_t n = pairs.level();
  const auto a = pairs.a(p), b = pairs.b(p);
  std::vector<std::array<int, 4>> raw;  // point, i, j, sign
  for (std::size_t c = 0; c < n * n; ++c) {
    if (a[c] == b[c]) continue;
    const int i = static_cast<int>(c / n), j = static_cast<int>(c % n);
    if (a[c] != 0) raw.push_back({static_cast<int>(a[c]), i, j, 1});
    if (b[c] != 0) raw.push_back({static_cast<int>(b[c]), i, j, -1});
  }
  std::sort(raw.begin(), raw.end());
  PairTerms t;
  t.dist = pairs.dist(p) / scale;
  for (const auto& r : raw) {
    const auto v = static_cast<std::uint32_t>(r[0] - 1);
    if (t.vars.empty() || t.vars.back() != v) {
      t.vars.push_back(v);
      t.offsets.push_back(static_cast<std::uint32_t>(t.cells.size()));
    }
    t.cells.push_back({r[1], r[2], r[3]});
  }
  t.offsets.push_back(static_cast<std::uint32_t>(t.cells.size()));
  return t;
}

class BarrierCore {
 public:
  BarrierCore(std::size_t n, std::size_t k, std::size_t points, std::vector<PairTerms> terms,
              Eigen::VectorXd obj_grad)
      : n_(n), k_(k), points_(points), terms_(std::move(terms)), c_(std::move(obj_grad)) {
    dim_ = 2 * (points_ - 1) * k_ * k_;
  }

  std::size_t dim() const { return dim_; }
  double nu() const { return 2.0 * static_cast<double>(n_ * k_ * terms_.size()); }
  double objective(const Eigen::VectorXd& z) const { return c_.dot(z); }

  // psi = -t obj + sum -log det W; nullopt when infeasible.
  std::optional<double> value(const Eigen::VectorXd& z, double t) const {
    const auto f = unpack(z);
    double phi = 0.0;
    for (const auto& pt : terms_) {
      const CMatrix c = constraint(pt, f);
      const auto nk = c.rows();
      const CMatrix w = pt.dist * pt.dist * CMatrix::Identity(nk, nk) - c.adjoint() * c;
      Eigen::LLT<CMatrix> llt(w);
      if (llt.info() != Eigen::Success) return std::nullopt;
      double ld = 0.0;
      for (Eigen::Index i = 0; i < nk; ++i) {
        const double d = llt.matrixLLT()(i, i).real();
        if (!(d > 0.0)) return std::nullopt;
        ld += 2.0 * std::log(d);
      }
      phi -= ld;
    }
    return -t * objective(z) + phi;
  }

  // Gradient and Hessian of psi at a feasible z.
  void derivatives(const Eigen::VectorXd& z, double t, Eigen::VectorXd& g, Eigen::MatrixXd& h) const {
    const auto f = unpack(z);
    constexpr std::size_t kBlock = 256;
    const std::size_t blocks = (terms_.size() + kBlock - 1) / kBlock;
    std::vector<Eigen::VectorXd> gs(blocks, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_)));
    std::vector<Eigen::MatrixXd> hs(blocks, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_),
                                                                  static_cast<Eigen::Index>(dim_)));
    parallel_chunks(
        blocks,
        [&](std::size_t lo, std::size_t hi) {
          for (std::size_t bl = lo; bl < hi; ++bl)
            for (std::size_t p = bl * kBlock; p < std::min(terms_.size(), (bl + 1) * kBlock); ++p)
              accumulate(terms_[p], f, gs[bl], hs[bl]);
        },
        1);
    g = -t * c_;
    h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    for (std::size_t bl = 0; bl < blocks; ++bl) {
      g += gs[bl];
      h += hs[bl];
    }
  }

  std::vector<CMatrix> unpack(const Eigen::VectorXd& z) const {
    const auto k = static_cast<Eigen::Index>(k_);
    std::vector<CMatrix> f(points_, CMatrix::Zero(k, k));
    for (std::size_t x = 1; x < points_; ++x)
      for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index s = 0; s < k; ++s) {
          const std::size_t j = index(x - 1, static_cast<std::size_t>(r), static_cast<std::size_t>(s));
          f[x](r, s) = Complex(z[static_cast<Eigen::Index>(2 * j)], z[static_cast<Eigen::Index>(2 * j + 1)]);
        }
    return f;
  }

  // Largest ||C_p|| / dist_p over the working set.
  double max_ratio(const Eigen::VectorXd& z) const {
    const auto f = unpack(z);
    double m = 0.0;
    for (const auto& pt : terms_) m = std::max(m, spectral_norm(constraint(pt, f)) / pt.dist);
    return m;
  }

 private:
  std::size_t index(std::size_t v, std::size_t r, std::size_t s) const { return (v * k_ + r) * k_ + s; }

  CMatrix constraint(const PairTerms& pt, const std::vector<CMatrix>& f) const {
    const auto k = static_cast<Eigen::Index>(k_);
    const auto nk = static_cast<Eigen::Index>(n_ * k_);
    CMatrix c = CMatrix::Zero(nk, nk);
    for (std::size_t v = 0; v < pt.vars.size(); ++v)
      for (std::uint32_t e = pt.offsets[v]; e < pt.offsets[v + 1]; ++e) {
        const auto& cell = pt.cells[e];
        c.block(cell[0] * k, cell[1] * k, k, k) += static_cast<double>(cell[2]) * f[pt.vars[v] + 1];
      }
    return c;
  }

  void accumulate(const PairTerms& pt, const std::vector<CMatrix>& f, Eigen::VectorXd& g,
                  Eigen::MatrixXd& h) const {
    const CMatrix c = constraint(pt, f);
    const auto nk = c.rows();
    const CMatrix w = pt.dist * pt.dist * CMatrix::Identity(nk, nk) - c.adjoint() * c;
    const CMatrix z = Eigen::LLT<CMatrix>(w).solve(CMatrix::Identity(nk, nk));
    const CMatrix y = c * z;
    const CMatrix tt = y * c.adjoint();
    const auto k = static_cast<int>(k_);

    for (std::size_t v1 = 0; v1 < pt.vars.size(); ++v1) {
      for (int r1 = 0; r1 < k; ++r1)
        for (int s1 = 0; s1 < k; ++s1) {
          const auto j1 = static_cast<Eigen::Index>(index(pt.vars[v1], r1, s1));
          Complex gq = 0.0;
          for (std::uint32_t e = pt.offsets[v1]; e < pt.offsets[v1 + 1]; ++e) {
            const auto& cl = pt.cells[e];
            gq += static_cast<double>(cl[2]) * std::conj(y(cl[0] * k + r1, cl[1] * k + s1));
          }
          g[2 * j1] += 2.0 * gq.real();
          g[2 * j1 + 1] -= 2.0 * gq.imag();

          for (std::size_t v2 = 0; v2 < pt.vars.size(); ++v2)
            for (int r2 = 0; r2 < k; ++r2)
              for (int s2 = 0; s2 < k; ++s2) {
                const auto j2 = static_cast<Eigen::Index>(index(pt.vars[v2], r2, s2));
                Complex a1 = 0.0, a2 = 0.0, a3 = 0.0;
                for (std::uint32_t e1 = pt.offsets[v1]; e1 < pt.offsets[v1 + 1]; ++e1) {
                  const auto& c1 = pt.cells[e1];
                  const int rho1 = c1[0] * k + r1, kap1 = c1[1] * k + s1;
                  for (std::uint32_t e2 = pt.offsets[v2]; e2 < pt.offsets[v2 + 1]; ++e2) {
                    const auto& c2 = pt.cells[e2];
                    const int rho2 = c2[0] * k + r2, kap2 = c2[1] * k + s2;
                    const double gg = static_cast<double>(c1[2] * c2[2]);
                    a1 += gg * z(kap1, kap2) * tt(rho2, rho1);
                    a2 += gg * std::conj(y(rho2, kap1)) * std::conj(y(rho1, kap2));
                    if (rho1 == rho2) a3 += gg * z(kap1, kap2);
                  }
                }
                const Complex x = a1 + a3;
                h(2 * j1, 2 * j2) += 2.0 * (x + a2).real();
                h(2 * j1 + 1, 2 * j2) -= 2.0 * (x + a2).imag();
                h(2 * j1, 2 * j2 + 1) += 2.0 * (x.imag() - a2.imag());
                h(2 * j1 + 1, 2 * j2 + 1) += 2.0 * (x - a2).real();
              }
        }
    }
  }

  std::size_t n_, k_, points_, dim_;
  std::vector<PairTerms> terms_;
  Eigen::VectorXd c_;
};

struct CentralPath {
  Eigen::VectorXd z;
  double t = 1.0;
  int newton_steps = 0;
  int stages = 0;
  bool stalled = false;
  std::string diagnostic;
};

// Follows the central path from a strictly feasible z.
inline CentralPath follow_path(const BarrierCore& core, Eigen::VectorXd z, double t,
                               const BarrierOptions& opts) {
  CentralPath out;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  for (int stage = 0; stage < opts.max_stages; ++stage) {
    ++out.stages;
    auto psi = core.value(z, t);
    if (!psi) throw InternalError("barrier iterate left the feasible region");
    int it = 0;
    for (;; ++it) {
      if (it >= opts.max_newton) {
        out.stalled = true;
        out.diagnostic = "Newton iteration cap reached at t=" + std::to_string(t);
        break;
      }
      core.derivatives(z, t, g, h);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      Eigen::VectorXd step = ldlt.solve(-g);
      double dec = -g.dot(step);
      if (ldlt.info() != Eigen::Success || !std::isfinite(dec) || dec < 0) {
        const double shift = 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
        h.diagonal().array() += shift;
        step = h.ldlt().solve(-g);
        dec = -g.dot(step);
      }
      ++out.newton_steps;
      // psi grows with t, so a tiny decrement relative to it is rounding noise.
      if (!(dec >= 0) || dec / 2.0 <= std::max(opts.newton_tol, 1e-15 * std::abs(*psi))) break;
      double s = 1.0;
      bool moved = false;
      // Steps below 1e-12 only chase rounding noise in psi.
      for (int ls = 0; ls < 40; ++ls, s *= 0.5) {
        const Eigen::VectorXd cand = z + s * step;
        const auto pv = core.value(cand, t);
        if (pv && *pv <= *psi - 0.25 * s * dec) {
          z = cand;
          psi = pv;
          moved = true;
          break;
        }
      }
      if (!moved) break;  // no further decrease is representable
    }
    if (out.stalled) break;
    const double obj = core.objective(z);
    if (core.nu() / t <= opts.gap_tol * std::max(std::abs(obj), 1e-3)) break;
    t *= opts.t_factor;
  }
  out.z = std::move(z);
  out.t = t;
  return out;
}

}  // namespace detail

/// Solves the barrier problem over `pairs` (full or sampled table), using a
/// cutting-plane working set when the table is large. `weights[x]` is k x k;
/// weights[0] is ignored. The returned witness is rescaled to be feasible
/// over the whole table. `hint` seeds the working set (e.g. the working set
/// of a previous solve with nearby weights).
inline BarrierResult barrier_maximize(const PairSet& pairs, std::size_t k, const std::vector<CMatrix>& weights,
                                      const BarrierOptions& opts = {}, const std::vector<std::size_t>& hint = {}) {
  if (pairs.empty()) throw InvalidInput("barrier: empty pair set");
  if (k == 0) throw InvalidInput("barrier: k must be positive");
  const std::size_t points = pairs.point_count();
  if (weights.size() != points) throw InvalidInput("barrier: one weight per point is required");
  for (const auto& w : weights)
    if (static_cast<std::size_t>(w.rows()) != k || static_cast<std::size_t>(w.cols()) != k)
      throw InvalidInput("barrier: weights must be k x k");

  double wscale = 0.0;
  for (std::size_t x = 1; x < points; ++x) wscale = std::max(wscale, weights[x].cwiseAbs().maxCoeff());
  BarrierResult res;
  res.witness = MatrixLipFunction::zero(points, k);
  if (wscale == 0.0) return res;
  const double dscale = pairs.max_dist();

  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::VectorXd c(static_cast<Eigen::Index>(2 * (points - 1) * k * k));
  for (std::size_t x = 1; x < points; ++x)
    for (Eigen::Index r = 0; r < kk; ++r)
      for (Eigen::Index s = 0; s < kk; ++s) {
        const auto j = static_cast<Eigen::Index>(((x - 1) * k + static_cast<std::size_t>(r)) * k +
                                                 static_cast<std::size_t>(s));
        const Complex w = weights[x](r, s) / wscale;
        c[2 * j] = w.real();
        c[2 * j + 1] = -w.imag();
      }

  // Working set: everything when small. Otherwise start from one pair per
  // point (its corner grid against the basepoint grid when present), since the
  // log-det barrier's parameter grows with every constraint it carries.
  std::vector<char> in_set(pairs.size(), 0);
  std::vector<std::size_t> work;
  const bool cutting = pairs.size() > opts.working_threshold;
  const std::size_t nn = pairs.level() * pairs.level();
  if (!cutting) {
    work.resize(pairs.size());
    std::iota(work.begin(), work.end(), std::size_t{0});
    std::fill(in_set.begin(), in_set.end(), 1);
  } else {
    std::vector<std::size_t> corner(points, pairs.size()), any(points, pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto a = pairs.a(p), b = pairs.b(p);
      for (std::size_t cell = 0; cell < nn; ++cell) {
        if (any[a[cell]] == pairs.size()) any[a[cell]] = p;
        if (any[b[cell]] == pairs.size()) any[b[cell]] = p;
      }
      const bool base_a = std::all_of(a.begin(), a.end(), [](PointId v) { return v == 0; });
      const bool single = std::all_of(b.begin() + 1, b.end(), [](PointId v) { return v == 0; });
      if (base_a && single && corner[b[0]] == pairs.size()) corner[b[0]] = p;
    }
    for (std::size_t x = 1; x < points; ++x) {
      const std::size_t p = corner[x] != pairs.size() ? corner[x] : any[x];
      if (p != pairs.size() && !in_set[p]) {
        in_set[p] = 1;
        work.push_back(p);
      }
    }
    for (std::size_t p : hint) {
      if (p >= pairs.size()) throw InvalidInput("barrier: working-set hint outside the pair table");
      if (!in_set[p]) {
        in_set[p] = 1;
        work.push_back(p);
      }
    }
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(c.size());
  const double t = 1.0;
  MatrixLipFunction f;
  for (int round = 0;; ++round) {
    std::vector<detail::PairTerms> terms;
    terms.reserve(work.size());
    std::vector<char> touched(points, 0);
    for (std::size_t p : work) {
      terms.push_back(detail::pair_terms(pairs, p, dscale));
      for (auto v : terms.back().vars) touched[v + 1] = 1;
    }
    for (std::size_t x = 1; x < points; ++x)
      if (!touched[x]) throw InvalidInput("pair set leaves point '" + std::to_string(x) + "' unconstrained");
    detail::BarrierCore core(pairs.level(), k, points, std::move(terms), c);
    // Each round restarts from the analytic center region: warm starts near
    // the new boundary at large t cost far more damped steps than they save.
    z.setZero();
    auto path = detail::follow_path(core, z, t, opts);
    res.newton_steps += path.newton_steps;
    res.stages += path.stages;
    res.rounds = round + 1;
    res.constraints = work.size();
    if (path.stalled) {
      res.stalled = true;
      res.diagnostic = path.diagnostic;
    }
    z = path.z;
    auto vals = core.unpack(z);
    for (auto& v : vals) v *= dscale;
    f = MatrixLipFunction(k, std::move(vals));
    if (!cutting || path.stalled || round + 1 >= opts.max_rounds) break;

    // Add the most violated pairs of the full table.
    std::vector<double> ratio(pairs.size(), 0.0);
    parallel_chunks(
        pairs.size(),
        [&](std::size_t lo, std::size_t hi) {
          for (std::size_t p = lo; p < hi; ++p)
            if (!in_set[p])
              ratio[p] = detail::constraint_value(f, pairs.a(p), pairs.b(p), pairs.level()) / pairs.dist(p);
        },
        512);
    std::vector<std::size_t> viol;
    for (std::size_t p = 0; p < pairs.size(); ++p)
      if (!in_set[p] && ratio[p] > 1.0 - 1e-9) viol.push_back(p);
    if (viol.empty()) break;
    std::stable_sort(viol.begin(), viol.end(), [&](std::size_t a, std::size_t b) { return ratio[a] > ratio[b]; });
    const std::size_t add = std::min(viol.size(), std::max<std::size_t>(32, work.size() / 2));
    for (std::size_t i = 0; i < add; ++i) {
      in_set[viol[i]] = 1;
      work.push_back(viol[i]);
    }
  }

  res.working_set = std::move(work);
  res.lip = lip_constant(f, pairs).value;
  if (res.lip > 1.0) f = f.scaled(1.0 / res.lip);
  double obj = 0.0;
  for (std::size_t x = 1; x < points; ++x)
    obj += (weights[x].array() * f.at(x).array()).sum().real();
  res.objective = obj;
  res.witness = std::move(f);
  return res;
}

}  // namespace opfree

#endif  // OPFREE_BARRIER_HPP
