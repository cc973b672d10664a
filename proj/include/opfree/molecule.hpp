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

#ifndef OPFREE_MOLECULE_HPP
#define OPFREE_MOLECULE_HPP

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <map>
#include <utility>
#include <vector>

#include "opfree/lipcalc.hpp"

namespace opfree {

/// A finite combination sum_x a_x delta_x. The basepoint term is never
/// stored, since every admissible function vanishes there; neither are exact
/// zeros.
class Molecule {
 public:
  Molecule() = default;
  Molecule(std::initializer_list<std::pair<const PointId, Complex>> terms) {
    for (const auto& [x, a] : terms) add(x, a);
  }

  static Molecule delta(PointId x) {
    Molecule m;
    m.add(x, 1.0);
    return m;
  }

  void add(PointId x, Complex a) {
    if (x == 0) return;
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw InvalidInput("molecule coefficient is not finite");
    auto [it, fresh] = coef_.try_emplace(x, a);
    if (!fresh) it->second += a;
    if (it->second == Complex(0.0)) coef_.erase(it);
  }

  const std::map<PointId, Complex>& terms() const noexcept { return coef_; }
  bool empty() const noexcept { return coef_.empty(); }
  Complex at(PointId x) const {
    const auto it = coef_.find(x);
    return it == coef_.end() ? Complex(0.0) : it->second;
  }
  bool is_real() const {
    for (const auto& [x, a] : coef_)
      if (a.imag() != 0.0) return false;
    return true;
  }
  double max_abs() const {
    double m = 0.0;
    for (const auto& [x, a] : coef_) m = std::max(m, std::abs(a));
    return m;
  }
  void check(const OperatorMetricSpace& x) const {
    if (!coef_.empty() && coef_.rbegin()->first >= x.size())
      throw InvalidInput("molecule refers to a point outside the space");
  }

  /// mu(f) = sum_x a_x f(x).
  Complex operator()(const LipFunction& f) const {
    Complex s = 0.0;
    for (const auto& [x, a] : coef_) s += a * f.values.at(x);
    return s;
  }

  friend Molecule operator+(Molecule a, const Molecule& b) {
    for (const auto& [x, c] : b.coef_) a.add(x, c);
    return a;
  }
  friend Molecule operator-(Molecule a, const Molecule& b) {
    for (const auto& [x, c] : b.coef_) a.add(x, -c);
    return a;
  }
  friend Molecule operator*(Complex c, const Molecule& a) {
    Molecule out;
    for (const auto& [x, v] : a.coef_) out.add(x, c * v);
    return out;
  }
  bool operator==(const Molecule&) const = default;

 private:
  std::map<PointId, Complex> coef_;
};

/// An m x m matrix of molecules, stored row-major.
class MatrixMolecule {
 public:
  MatrixMolecule() : m_(1), entries_(1) {}
  explicit MatrixMolecule(std::size_t m) : m_(m), entries_(m * m) {
    if (m == 0) throw InvalidInput("matrix molecule size must be positive");
  }
  MatrixMolecule(std::size_t m, std::vector<Molecule> entries) : m_(m), entries_(std::move(entries)) {
    if (m == 0 || entries_.size() != m * m) throw InvalidInput("matrix molecule needs m*m entries");
  }
  MatrixMolecule(const Molecule& mu) : m_(1), entries_{mu} {}  // NOLINT(google-explicit-constructor)

  /// [delta_{a_ij} - delta_{b_ij}].
  static MatrixMolecule elementary(const MatrixPoint& a, const MatrixPoint& b) {
    if (a.n != b.n) throw InvalidInput("elementary molecule needs grids of one level");
    MatrixMolecule out(a.n);
    for (std::size_t c = 0; c < a.cells.size(); ++c)
      out.entries_[c] = Molecule::delta(a.cells[c]) - Molecule::delta(b.cells[c]);
    return out;
  }

  std::size_t size() const noexcept { return m_; }
  const Molecule& at(std::size_t a, std::size_t b) const { return entries_.at(a * m_ + b); }
  Molecule& at(std::size_t a, std::size_t b) { return entries_.at(a * m_ + b); }
  const std::vector<Molecule>& entries() const noexcept { return entries_; }

  bool empty() const {
    for (const auto& e : entries_)
      if (!e.empty()) return false;
    return true;
  }
  bool is_real() const {
    for (const auto& e : entries_)
      if (!e.is_real()) return false;
    return true;
  }
  double max_abs() const {
    double m = 0.0;
    for (const auto& e : entries_) m = std::max(m, e.max_abs());
    return m;
  }
  void check(const OperatorMetricSpace& x) const {
    for (const auto& e : entries_) e.check(x);
  }

  /// Points carrying a nonzero coefficient somewhere, in increasing order.
  std::vector<PointId> support() const {
    std::vector<PointId> s;
    for (const auto& e : entries_)
      for (const auto& [x, a] : e.terms()) s.push_back(x);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
  }

  /// The m x m coefficient matrix A_x, so that mu = sum_x A_x delta_x.
  CMatrix coefficient(PointId x) const {
    const auto m = static_cast<Eigen::Index>(m_);
    CMatrix out(m, m);
    for (std::size_t a = 0; a < m_; ++a)
      for (std::size_t b = 0; b < m_; ++b)
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = at(a, b).at(x);
    return out;
  }

  /// [f_rs(mu_ab)] = sum_x A_x (x) F(x), an mk x mk matrix.
  CMatrix pairing(const MatrixLipFunction& f) const {
    const auto m = static_cast<Eigen::Index>(m_), k = static_cast<Eigen::Index>(f.k());
    CMatrix out = CMatrix::Zero(m * k, m * k);
    for (std::size_t a = 0; a < m_; ++a)
      for (std::size_t b = 0; b < m_; ++b)
        for (const auto& [x, c] : at(a, b).terms())
          out.block(static_cast<Eigen::Index>(a) * k, static_cast<Eigen::Index>(b) * k, k, k) += c * f.at(x);
    return out;
  }

  friend MatrixMolecule operator*(Complex c, const MatrixMolecule& a) {
    MatrixMolecule out(a.m_);
    for (std::size_t i = 0; i < a.entries_.size(); ++i) out.entries_[i] = c * a.entries_[i];
    return out;
  }
  friend MatrixMolecule operator+(const MatrixMolecule& a, const MatrixMolecule& b) {
    if (a.m_ != b.m_) throw InvalidInput("matrix molecules of different sizes");
    MatrixMolecule out(a.m_);
    for (std::size_t i = 0; i < a.entries_.size(); ++i) out.entries_[i] = a.entries_[i] + b.entries_[i];
    return out;
  }
  bool operator==(const MatrixMolecule&) const = default;

 private:
  std::size_t m_;
  std::vector<Molecule> entries_;
};

}  // namespace opfree

#endif  // OPFREE_MOLECULE_HPP
