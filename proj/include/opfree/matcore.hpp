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

#ifndef OPFREE_MATCORE_HPP
#define OPFREE_MATCORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "opfree/error.hpp"

namespace opfree {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Relative tolerance of every singular-value computation.
inline constexpr double kTolSvd = 1e-10;
/// Iteration cap shared by the Jacobi sweeps and the power iteration.
inline constexpr int kMaxIterations = 10000;
/// Above this dimension the top singular value is found by power iteration.
inline constexpr Eigen::Index kJacobiMaxDim = 64;

/// Top singular triple of a matrix: M * right ~= sigma * left.
struct SingularPair {
  double sigma = 0.0;
  CVector left;
  CVector right;
};

inline void require_finite(const CMatrix& m, const char* what = "matrix") {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw InvalidInput(std::string(what) + " has a non-finite entry");
  }
}

namespace detail {

struct JacobiResult {
  Eigen::VectorXd sigma;  // unsorted, one per column of the working matrix
  CMatrix work;           // A * V; columns are sigma_i * u_i
  CMatrix v;              // accumulated right rotations (empty if not requested)
};

// One-sided (Hestenes) Jacobi on the columns of `a`. Requires rows >= cols.
inline JacobiResult hestenes(CMatrix a, bool want_v) {
  const Eigen::Index n = a.cols();
  CMatrix v;
  if (want_v) v = CMatrix::Identity(n, n);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double tol = eps * static_cast<double>(std::max<Eigen::Index>(a.rows(), 4));
  // Columns below this squared norm only carry singular values under
  // eps * ||a||_F; rotating them against rounding noise never settles.
  const double negligible = eps * eps * a.squaredNorm();
  bool rotated = true;
  int sweep = 0;
  while (rotated) {
    if (++sweep > kMaxIterations)
      throw NumericalInstability("Jacobi SVD did not converge");
    rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = a.col(p).squaredNorm();
        const double beta = a.col(q).squaredNorm();
        const Complex gamma = a.col(p).dot(a.col(q));
        const double g = std::abs(gamma);
        if (alpha <= negligible || beta <= negligible) continue;
        if (g == 0.0 || g <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const Complex phase = std::conj(gamma / g);
        CVector ap = a.col(p);
        CVector aq = phase * a.col(q);
        a.col(p) = c * ap - s * aq;
        a.col(q) = s * ap + c * aq;
        if (want_v) {
          CVector vp = v.col(p);
          CVector vq = phase * v.col(q);
          v.col(p) = c * vp - s * vq;
          v.col(q) = s * vp + c * vq;
        }
      }
    }
  }
  Eigen::VectorXd sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) sigma(i) = a.col(i).norm();
  return {std::move(sigma), std::move(a), std::move(v)};
}

// Top singular pair of a dense (connected) block.
inline SingularPair jacobi_top_pair(const CMatrix& m) {
  const bool flip = m.rows() < m.cols();
  const CMatrix a = flip ? CMatrix(m.adjoint()) : m;
  JacobiResult r = hestenes(a, true);
  Eigen::Index best = 0;
  r.sigma.maxCoeff(&best);
  SingularPair out;
  out.sigma = r.sigma(best);
  CVector right = r.v.col(best);
  CVector left = out.sigma > 0 ? CVector(r.work.col(best) / out.sigma)
                               : CVector(CVector::Unit(a.rows(), 0));
  if (flip) std::swap(left, right);
  out.left = std::move(left);
  out.right = std::move(right);
  return out;
}

inline double jacobi_norm(const CMatrix& m) {
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  const bool flip = m.rows() < m.cols();
  return hestenes(flip ? CMatrix(m.adjoint()) : m, false).sigma.maxCoeff();
}

// Power iteration on M*M; returns false if it did not settle.
inline bool power_top_pair(const CMatrix& m, SingularPair& out) {
  const Eigen::Index n = m.cols();
  CVector x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x(i) = Complex(1.0 + 0.01 * static_cast<double>(i % 7), 0.003 * static_cast<double>(i));
  x.normalize();
  double lambda = 0.0;
  for (int it = 0; it < kMaxIterations; ++it) {
    CVector y = m.adjoint() * (m * x);
    const double next = std::real(x.dot(y));
    const double ny = y.norm();
    if (ny == 0.0) return false;
    const double resid = (y - next * x).norm();
    x = y / ny;
    if (it > 2 && std::abs(next - lambda) <= 1e-14 * next && resid <= 1e-11 * next) {
      out.sigma = std::sqrt(next);
      out.right = x;
      out.left = m * x / out.sigma;
      out.left.normalize();
      return true;
    }
    lambda = next;
  }
  return false;
}

inline SingularPair dense_top_pair(const CMatrix& m) {
  if (std::max(m.rows(), m.cols()) > kJacobiMaxDim) {
    SingularPair p;
    if (power_top_pair(m, p)) return p;
    // no convergence: fall through to the exact kernel
  }
  return jacobi_top_pair(m);
}

inline double dense_norm(const CMatrix& m) {
  if (std::max(m.rows(), m.cols()) > kJacobiMaxDim) {
    SingularPair p;
    if (power_top_pair(m, p)) return p.sigma;
  }
  return jacobi_norm(m);
}

// Connected components of the bipartite row/column graph of the nonzero
// pattern. Each component lists its rows and columns in increasing order.
struct Component {
  std::vector<Eigen::Index> rows;
  std::vector<Eigen::Index> cols;
};

inline std::vector<Component> components(const CMatrix& m) {
  const Eigen::Index r = m.rows(), c = m.cols();
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(r + c));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i)
      if (m(i, j) != Complex(0.0)) {
        const Eigen::Index a = find(i), b = find(r + j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(r + c), -1);
  std::vector<Component> out;
  auto slot_of = [&](Eigen::Index node) {
    const Eigen::Index root = find(node);
    if (slot[root] < 0) {
      slot[root] = static_cast<Eigen::Index>(out.size());
      out.emplace_back();
    }
    return slot[root];
  };
  for (Eigen::Index i = 0; i < r; ++i) out[slot_of(i)].rows.push_back(i);
  for (Eigen::Index j = 0; j < c; ++j) out[slot_of(r + j)].cols.push_back(j);
  std::erase_if(out, [](const Component& k) { return k.rows.empty() || k.cols.empty(); });
  return out;
}

inline CMatrix extract(const CMatrix& m, const Component& k) {
  CMatrix s(static_cast<Eigen::Index>(k.rows.size()), static_cast<Eigen::Index>(k.cols.size()));
  for (std::size_t i = 0; i < k.rows.size(); ++i)
    for (std::size_t j = 0; j < k.cols.size(); ++j) s(i, j) = m(k.rows[i], k.cols[j]);
  return s;
}

}  // namespace detail

/// Largest singular value. Block-diagonal structure (up to row/column
/// permutation) is split off first, so a direct sum is evaluated block by
/// block and I (x) M gives bit-identical results to M.
inline double spectral_norm(const CMatrix& m) {
  require_finite(m);
  if (m.size() == 0) return 0.0;
  const auto comps = detail::components(m);
  if (comps.empty()) return 0.0;
  if (comps.size() == 1 && comps[0].rows.size() == static_cast<std::size_t>(m.rows()) &&
      comps[0].cols.size() == static_cast<std::size_t>(m.cols()))
    return detail::dense_norm(m);
  double best = 0.0;
  for (const auto& k : comps) best = std::max(best, detail::dense_norm(detail::extract(m, k)));
  return best;
}

/// Top singular pair with unit vectors; throws DegenerateInput on a zero matrix.
inline SingularPair top_singular_pair(const CMatrix& m) {
  require_finite(m);
  const auto comps = detail::components(m);
  if (comps.empty()) throw DegenerateInput("top_singular_pair of a zero matrix");
  SingularPair best;
  best.sigma = -1.0;
  const detail::Component* arg = nullptr;
  for (const auto& k : comps) {
    SingularPair p = detail::dense_top_pair(detail::extract(m, k));
    if (p.sigma > best.sigma) {
      best = std::move(p);
      arg = &k;
    }
  }
  SingularPair out;
  out.sigma = best.sigma;
  out.left = CVector::Zero(m.rows());
  out.right = CVector::Zero(m.cols());
  for (std::size_t i = 0; i < arg->rows.size(); ++i) out.left(arg->rows[i]) = best.left(i);
  for (std::size_t j = 0; j < arg->cols.size(); ++j) out.right(arg->cols[j]) = best.right(j);
  out.left.normalize();
  out.right.normalize();
  return out;
}

/// Places blocks[i * n + j] at row-block i, column-block j.
inline CMatrix block_assemble(std::span<const CMatrix> blocks, std::size_t n) {
  if (n == 0 || blocks.size() != n * n)
    throw InvalidInput("block_assemble: expected n*n blocks");
  const Eigen::Index r = blocks[0].rows(), c = blocks[0].cols();
  CMatrix out(static_cast<Eigen::Index>(n) * r, static_cast<Eigen::Index>(n) * c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const CMatrix& b = blocks[i * n + j];
      if (b.rows() != r || b.cols() != c) throw InvalidInput("block_assemble: ragged blocks");
      out.block(static_cast<Eigen::Index>(i) * r, static_cast<Eigen::Index>(j) * c, r, c) = b;
    }
  return out;
}

/// Full singular value decomposition m = U diag(sigma) V*, singular values
/// sorted in decreasing order. Thin: U is rows x p, V is cols x p with
/// p = min(rows, cols).
struct Svd {
  Eigen::VectorXd sigma;
  CMatrix u;
  CMatrix v;
};

inline Svd svd(const CMatrix& m) {
  require_finite(m);
  const bool flip = m.rows() < m.cols();
  const CMatrix a = flip ? CMatrix(m.adjoint()) : m;
  detail::JacobiResult r = detail::hestenes(a, true);
  const Eigen::Index p = a.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return r.sigma(x) > r.sigma(y); });
  Svd out;
  out.sigma.resize(p);
  CMatrix left(a.rows(), p), right(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::Index k = order[static_cast<std::size_t>(i)];
    out.sigma(i) = r.sigma(k);
    right.col(i) = r.v.col(k);
    left.col(i) = r.sigma(k) > 0 ? CVector(r.work.col(k) / r.sigma(k)) : CVector::Zero(a.rows());
  }
  // Complete null left vectors to an orthonormal set.
  for (Eigen::Index i = 0; i < p; ++i) {
    if (out.sigma(i) > 0) continue;
    for (Eigen::Index e = 0; e < a.rows(); ++e) {
      CVector cand = CVector::Unit(a.rows(), e);
      for (Eigen::Index j = 0; j < p; ++j)
        if (j != i && left.col(j).squaredNorm() > 0) cand -= left.col(j).dot(cand) * left.col(j);
      if (cand.norm() > 1e-8) {
        left.col(i) = cand.normalized();
        break;
      }
    }
  }
  if (flip) {
    out.u = std::move(right);
    out.v = std::move(left);
  } else {
    out.u = std::move(left);
    out.v = std::move(right);
  }
  return out;
}

/// Unitary (or partial isometry) polar factor W V* of m = W S V*.
inline CMatrix polar_factor(const CMatrix& m) {
  const Svd s = svd(m);
  return s.u * s.v.adjoint();
}

/// Orthonormal basis of the span of the given columns (rank threshold
/// relative to the largest singular value).
inline CMatrix orthonormal_basis(const CMatrix& cols, double rel_tol = 1e-12) {
  if (cols.cols() == 0) return CMatrix(cols.rows(), 0);
  const Svd s = svd(cols);
  const double top = s.sigma.size() ? s.sigma(0) : 0.0;
  Eigen::Index rank = 0;
  while (rank < s.sigma.size() && s.sigma(rank) > rel_tol * top && top > 0) ++rank;
  return s.u.leftCols(rank);
}

}  // namespace opfree

#endif  // OPFREE_MATCORE_HPP
