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

#ifndef OPFREE_SYMBOLIC_HPP
#define OPFREE_SYMBOLIC_HPP

#include <array>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "opfree/matcore.hpp"
#include "opfree/parallel.hpp"

namespace opfree {

/// A smooth matrix map built from the input variable, constant matrices,
/// sums, scalar multiples, products and adjoints.
class SymbolicMap {
 public:
  enum class Kind { kInput, kConstant, kSum, kScale, kProduct, kAdjoint };

  static SymbolicMap input(std::size_t d) {
    if (d == 0) throw InvalidInput("input dimension must be positive");
    return SymbolicMap(d, make(Kind::kInput, {}, {}, nullptr, nullptr, d, d));
  }
  static SymbolicMap constant(std::size_t input_dim, CMatrix c) {
    if (input_dim == 0) throw InvalidInput("input dimension must be positive");
    require_finite(c, "constant");
    const auto r = static_cast<std::size_t>(c.rows()), s = static_cast<std::size_t>(c.cols());
    return SymbolicMap(input_dim, make(Kind::kConstant, std::move(c), {}, nullptr, nullptr, r, s));
  }

  friend SymbolicMap operator+(const SymbolicMap& a, const SymbolicMap& b) {
    a.same_input(b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("sum of mismatched shapes");
    return SymbolicMap(a.d_, make(Kind::kSum, {}, {}, a.root_, b.root_, a.rows(), a.cols()));
  }
  friend SymbolicMap operator*(Complex c, const SymbolicMap& a) {
    return SymbolicMap(a.d_, make(Kind::kScale, {}, c, a.root_, nullptr, a.rows(), a.cols()));
  }
  friend SymbolicMap operator-(const SymbolicMap& a, const SymbolicMap& b) { return a + Complex(-1.0) * b; }
  friend SymbolicMap operator*(const SymbolicMap& a, const SymbolicMap& b) {
    a.same_input(b);
    if (a.cols() != b.rows()) throw InvalidInput("product of mismatched shapes");
    return SymbolicMap(a.d_, make(Kind::kProduct, {}, {}, a.root_, b.root_, a.rows(), b.cols()));
  }
  SymbolicMap adjoint() const {
    return SymbolicMap(d_, make(Kind::kAdjoint, {}, {}, root_, nullptr, cols(), rows()));
  }

  std::size_t input_dim() const noexcept { return d_; }
  std::size_t rows() const noexcept { return root_->rows; }
  std::size_t cols() const noexcept { return root_->cols; }

  CMatrix operator()(const CMatrix& x) const {
    if (static_cast<std::size_t>(x.rows()) != d_ || static_cast<std::size_t>(x.cols()) != d_)
      throw InvalidInput("symbolic map evaluated at a matrix of the wrong shape");
    return eval(*root_, x);
  }

 private:
  struct Node {
    Kind kind;
    CMatrix value;
    Complex scale;
    std::shared_ptr<const Node> lhs, rhs;
    std::size_t rows, cols;
  };

  SymbolicMap(std::size_t d, std::shared_ptr<const Node> root) : d_(d), root_(std::move(root)) {}

  static std::shared_ptr<const Node> make(Kind k, CMatrix v, Complex c, std::shared_ptr<const Node> l,
                                          std::shared_ptr<const Node> r, std::size_t rows,
                                          std::size_t cols) {
    return std::make_shared<const Node>(Node{k, std::move(v), c, std::move(l), std::move(r), rows, cols});
  }

  void same_input(const SymbolicMap& o) const {
    if (d_ != o.d_) throw InvalidInput("symbolic maps over different input shapes");
  }

  static CMatrix eval(const Node& n, const CMatrix& x) {
    switch (n.kind) {
      case Kind::kInput: return x;
      case Kind::kConstant: return n.value;
      case Kind::kSum: return eval(*n.lhs, x) + eval(*n.rhs, x);
      case Kind::kScale: return n.scale * eval(*n.lhs, x);
      case Kind::kProduct: return eval(*n.lhs, x) * eval(*n.rhs, x);
      case Kind::kAdjoint: return eval(*n.lhs, x).adjoint();
    }
    throw InternalError("unknown symbolic node");
  }

  std::size_t d_;
  std::shared_ptr<const Node> root_;
};

/// Step sizes for central differences; consecutive ratios must be equal.
struct FdSchedule {
  std::array<double, 3> lambda{1e-3, 5e-4, 2.5e-4};
};

/// Central-difference estimate of Df_x(a) with one Richardson step.
/// Throws NumericalInstability when the two extrapolants disagree.
inline CMatrix gateaux_fd(const SymbolicMap& f, const CMatrix& x, const CMatrix& a,
                          FdSchedule schedule = {}) {
  require_finite(x, "base point");
  require_finite(a, "direction");
  const auto& l = schedule.lambda;
  if (!(l[0] > l[1] && l[1] > l[2] && l[2] > 0))
    throw InvalidInput("step schedule must be strictly decreasing and positive");
  const double r = l[0] / l[1];
  if (std::abs(l[1] / l[2] - r) > 1e-12 * r) throw InvalidInput("step schedule must be geometric");
  auto central = [&](double h) -> CMatrix { return (f(x + h * a) - f(x - h * a)) / (2.0 * h); };
  const CMatrix d0 = central(l[0]), d1 = central(l[1]), d2 = central(l[2]);
  const double r2 = r * r;
  const CMatrix e1 = (r2 * d1 - d0) / (r2 - 1.0);
  const CMatrix e2 = (r2 * d2 - d1) / (r2 - 1.0);
  const double scale = std::max(1.0, f(x).norm());
  if ((e2 - e1).norm() > 1e-4 * e2.norm() + 1e-10 * scale)
    throw NumericalInstability("finite-difference extrapolation did not settle");
  return e2;
}

struct DerivativeOptions {
  std::size_t random_directions = 64;
  std::size_t mesh_pairs = 256;
  double radius = 1e-2;
  double slack = 1e-3;
  std::uint64_t seed = 0;
  FdSchedule schedule{};
};

struct DerivativeReport {
  double derivative_norm = 0.0;  // sampled ||Df_x||_n
  double lip_estimate = 0.0;     // sampled Lip_n(f) near x
  std::size_t directions = 0;
  std::size_t pairs = 0;
  bool pass = false;
};

namespace detail {

inline CMatrix assemble_cells(const std::vector<CMatrix>& cells, std::size_t n) {
  return block_assemble(cells, n);
}

inline std::vector<CMatrix> apply_cells(const std::vector<CMatrix>& cells,
                                        const std::function<CMatrix(const CMatrix&)>& g) {
  std::vector<CMatrix> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(g(c));
  return out;
}

}  // namespace detail

/// Compares the level-n norm of the estimated derivative at x, over direction
/// grids, with a sampled Lip_n(f) over a mesh of radius `radius` around x.
inline DerivativeReport derivative_bound_check(const SymbolicMap& f, const CMatrix& x, std::size_t n,
                                               const DerivativeOptions& opts = {}) {
  if (n == 0) throw InvalidInput("level must be at least 1");
  const auto d = static_cast<Eigen::Index>(f.input_dim());
  const std::size_t cells = n * n;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss;
  auto random_cell = [&] {
    CMatrix m(d, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = Complex(gauss(rng), gauss(rng));
    return m;
  };

  std::vector<std::vector<CMatrix>> dirs;
  for (std::size_t t = 0; t < opts.random_directions; ++t) {
    std::vector<CMatrix> g;
    for (std::size_t c = 0; c < cells; ++c) g.push_back(random_cell());
    dirs.push_back(std::move(g));
  }
  for (std::size_t c = 0; c < cells; ++c)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        std::vector<CMatrix> g(cells, CMatrix::Zero(d, d));
        g[c](i, j) = 1.0;
        dirs.push_back(std::move(g));
      }

  DerivativeReport rep;
  rep.directions = dirs.size();
  auto ratio = [&](const std::vector<CMatrix>& lhs, const std::vector<CMatrix>& rhs,
                   const std::vector<CMatrix>& den) {
    std::vector<CMatrix> num(cells);
    for (std::size_t c = 0; c < cells; ++c) num[c] = lhs[c] - rhs[c];
    const double dd = spectral_norm(detail::assemble_cells(den, n));
    return dd > 0 ? spectral_norm(detail::assemble_cells(num, n)) / dd : 0.0;
  };

  const std::vector<CMatrix> zero_cells(cells, CMatrix::Zero(static_cast<Eigen::Index>(f.rows()),
                                                              static_cast<Eigen::Index>(f.cols())));
  for (const auto& g : dirs) {
    const auto deriv = detail::apply_cells(g, [&](const CMatrix& a) { return gateaux_fd(f, x, a, opts.schedule); });
    rep.derivative_norm = std::max(rep.derivative_norm, ratio(deriv, zero_cells, g));
  }

  // Secant pairs [x + r a_ij], [x - r a_ij] along every direction grid.
  for (const auto& g : dirs) {
    std::vector<CMatrix> p(cells), q(cells), diff(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      p[c] = x + opts.radius * g[c];
      q[c] = x - opts.radius * g[c];
      diff[c] = p[c] - q[c];
    }
    rep.lip_estimate = std::max(rep.lip_estimate, ratio(detail::apply_cells(p, std::cref(f)),
                                                        detail::apply_cells(q, std::cref(f)), diff));
    ++rep.pairs;
  }
  // Independent random mesh pairs inside the ball.
  for (std::size_t t = 0; t < opts.mesh_pairs; ++t) {
    std::vector<CMatrix> p(cells), q(cells), diff(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      CMatrix u = random_cell(), v = random_cell();
      p[c] = x + opts.radius * u / std::max(1.0, u.norm());
      q[c] = x + opts.radius * v / std::max(1.0, v.norm());
      diff[c] = p[c] - q[c];
    }
    rep.lip_estimate = std::max(rep.lip_estimate, ratio(detail::apply_cells(p, std::cref(f)),
                                                        detail::apply_cells(q, std::cref(f)), diff));
    ++rep.pairs;
  }
  rep.pass = rep.derivative_norm <= rep.lip_estimate + opts.slack;
  return rep;
}

}  // namespace opfree

#endif  // OPFREE_SYMBOLIC_HPP
