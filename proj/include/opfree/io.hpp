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

#ifndef OPFREE_IO_HPP
#define OPFREE_IO_HPP

#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "opfree/linearize.hpp"
#include "opfree/maxmodel.hpp"

namespace opfree {

using Json = nlohmann::json;

/// Points as named d x d matrices of [re, im] pairs, in file order.
struct SpaceDocument {
  std::size_t ambient_dim = 0;
  std::vector<std::string> names;
  std::vector<CMatrix> points;
  std::string basepoint;

  bool operator==(const SpaceDocument& o) const {
    if (ambient_dim != o.ambient_dim || names != o.names || basepoint != o.basepoint) return false;
    if (points.size() != o.points.size()) return false;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (points[i].rows() != o.points[i].rows() || points[i].cols() != o.points[i].cols() ||
          points[i] != o.points[i])
        return false;
    return true;
  }
};

namespace detail {

[[noreturn]] inline void bad_field(const std::string& where, const std::string& what) {
  throw InvalidInput(where + ": " + what);
}

inline const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) bad_field(where, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) bad_field(where, std::string("missing field '") + key + "'");
  return *it;
}

inline Complex complex_from(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  bad_field(where, "expected a number or an [re, im] pair");
}

inline Json complex_to(Complex z) { return Json::array({z.real(), z.imag()}); }

inline CMatrix matrix_from(const Json& j, const std::string& where, Eigen::Index rows = -1) {
  if (!j.is_array() || j.empty()) bad_field(where, "expected a non-empty array of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  if (rows >= 0 && r != rows) bad_field(where, "expected " + std::to_string(rows) + " rows, got " + std::to_string(r));
  CMatrix m(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    const std::string rw = where + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != r)
      bad_field(rw, "expected a row of " + std::to_string(r) + " entries");
    for (Eigen::Index c = 0; c < r; ++c)
      m(i, c) = complex_from(row[static_cast<std::size_t>(c)], rw + "[" + std::to_string(c) + "]");
  }
  return m;
}

inline Json matrix_to(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to(m(i, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Parses JSON text; syntax errors report line and column.
inline Json parse_json(const std::string& text, const std::string& source = "input") {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(source + ": " + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str(), path);
}

inline SpaceDocument space_document_from_json(const Json& j) {
  SpaceDocument doc;
  const auto& dim = detail::field(j, "ambient_dim", "space");
  if (!dim.is_number_unsigned() || dim.get<std::size_t>() == 0)
    detail::bad_field("space.ambient_dim", "expected a positive integer");
  doc.ambient_dim = dim.get<std::size_t>();
  const auto& pts = detail::field(j, "points", "space");
  if (!pts.is_array()) detail::bad_field("space.points", "expected an array");
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::string where = "space.points[" + std::to_string(i) + "]";
    const auto& name = detail::field(pts[i], "name", where);
    if (!name.is_string() || name.get<std::string>().empty()) detail::bad_field(where + ".name", "expected a non-empty string");
    const auto s = name.get<std::string>();
    if (!seen.emplace(s, i).second) detail::bad_field(where + ".name", "duplicate point name '" + s + "'");
    doc.names.push_back(s);
    doc.points.push_back(detail::matrix_from(detail::field(pts[i], "matrix", where), where + ".matrix",
                                             static_cast<Eigen::Index>(doc.ambient_dim)));
  }
  if (doc.points.size() < 2) detail::bad_field("space.points", "at least two points are required");
  const auto& base = detail::field(j, "basepoint", "space");
  if (!base.is_string()) detail::bad_field("space.basepoint", "expected a point name");
  doc.basepoint = base.get<std::string>();
  if (!seen.count(doc.basepoint)) detail::bad_field("space.basepoint", "unknown point '" + doc.basepoint + "'");
  return doc;
}

inline Json space_document_to_json(const SpaceDocument& doc) {
  Json pts = Json::array();
  for (std::size_t i = 0; i < doc.points.size(); ++i)
    pts.push_back({{"name", doc.names[i]}, {"matrix", detail::matrix_to(doc.points[i])}});
  return {{"ambient_dim", doc.ambient_dim}, {"basepoint", doc.basepoint}, {"points", std::move(pts)}};
}

/// The space with the basepoint moved to index 0; other points keep file order.
inline std::shared_ptr<const OperatorMetricSpace> to_space(const SpaceDocument& doc) {
  std::vector<CMatrix> pts;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < doc.points.size(); ++i)
    if (doc.names[i] == doc.basepoint) {
      pts.push_back(doc.points[i]);
      names.push_back(doc.names[i]);
    }
  for (std::size_t i = 0; i < doc.points.size(); ++i)
    if (doc.names[i] != doc.basepoint) {
      pts.push_back(doc.points[i]);
      names.push_back(doc.names[i]);
    }
  return std::make_shared<const OperatorMetricSpace>(std::move(pts), std::move(names));
}

inline SpaceDocument to_document(const OperatorMetricSpace& x) {
  return {x.ambient_dim(), x.labels(), x.points(), x.label(0)};
}

inline PointId point_by_name(const OperatorMetricSpace& x, const std::string& name, const std::string& where) {
  const auto id = x.find(name);
  if (!id) detail::bad_field(where, "unknown point '" + name + "'");
  return *id;
}

/// {"terms": [{"point": name, "coef": z}, ...]}; z is a number or [re, im].
inline Molecule molecule_from_json(const Json& j, const OperatorMetricSpace& x, const std::string& where = "molecule") {
  const auto& terms = detail::field(j, "terms", where);
  if (!terms.is_array()) detail::bad_field(where + ".terms", "expected an array");
  Molecule mu;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string w = where + ".terms[" + std::to_string(i) + "]";
    const auto& name = detail::field(terms[i], "point", w);
    if (!name.is_string()) detail::bad_field(w + ".point", "expected a point name");
    mu.add(point_by_name(x, name.get<std::string>(), w + ".point"),
           detail::complex_from(detail::field(terms[i], "coef", w), w + ".coef"));
  }
  return mu;
}

inline Json molecule_to_json(const Molecule& mu, const OperatorMetricSpace& x) {
  Json terms = Json::array();
  for (const auto& [p, a] : mu.terms()) terms.push_back({{"point", x.label(p)}, {"coef", detail::complex_to(a)}});
  return {{"terms", std::move(terms)}};
}

/// Either a scalar molecule or {"matrix": [[molecule, ...], ...]}.
inline MatrixMolecule matrix_molecule_from_json(const Json& j, const OperatorMetricSpace& x) {
  if (!j.is_object()) detail::bad_field("molecule", "expected an object");
  if (!j.contains("matrix")) return molecule_from_json(j, x);
  const auto& rows = j["matrix"];
  if (!rows.is_array() || rows.empty()) detail::bad_field("molecule.matrix", "expected a non-empty array of rows");
  const std::size_t m = rows.size();
  MatrixMolecule mu(m);
  for (std::size_t a = 0; a < m; ++a) {
    const std::string w = "molecule.matrix[" + std::to_string(a) + "]";
    if (!rows[a].is_array() || rows[a].size() != m) detail::bad_field(w, "expected a row of " + std::to_string(m) + " molecules");
    for (std::size_t b = 0; b < m; ++b) mu.at(a, b) = molecule_from_json(rows[a][b], x, w + "[" + std::to_string(b) + "]");
  }
  return mu;
}

inline Json matrix_molecule_to_json(const MatrixMolecule& mu, const OperatorMetricSpace& x) {
  if (mu.size() == 1) return molecule_to_json(mu.at(0, 0), x);
  Json rows = Json::array();
  for (std::size_t a = 0; a < mu.size(); ++a) {
    Json row = Json::array();
    for (std::size_t b = 0; b < mu.size(); ++b) row.push_back(molecule_to_json(mu.at(a, b), x));
    rows.push_back(std::move(row));
  }
  return {{"matrix", std::move(rows)}};
}

/// {"k": k, "values": {name: value}}; a value is a complex number when k = 1,
/// otherwise a k x k matrix of [re, im] pairs. Unlisted points map to 0.
inline MatrixLipFunction function_from_json(const Json& j, const OperatorMetricSpace& x) {
  std::size_t k = 1;
  if (j.contains("k")) {
    if (!j["k"].is_number_unsigned() || j["k"].get<std::size_t>() == 0) detail::bad_field("function.k", "expected a positive integer");
    k = j["k"].get<std::size_t>();
  }
  const auto kk = static_cast<Eigen::Index>(k);
  std::vector<CMatrix> vals(x.size(), CMatrix::Zero(kk, kk));
  const auto& v = detail::field(j, "values", "function");
  if (!v.is_object()) detail::bad_field("function.values", "expected an object keyed by point name");
  for (const auto& [name, val] : v.items()) {
    const std::string w = "function.values." + name;
    const PointId p = point_by_name(x, name, w);
    vals[p] = k == 1 && !(val.is_array() && !val.empty() && val[0].is_array()) ? CMatrix::Constant(1, 1, detail::complex_from(val, w))
                                                                            : detail::matrix_from(val, w, kk);
  }
  if (!vals[0].isZero(0.0)) detail::bad_field("function.values", "the basepoint value must be zero");
  return {k, std::move(vals)};
}

/// {"assign": {source name: target name}}; unlisted points go to the basepoint.
inline PointMap map_from_json(const Json& j, std::shared_ptr<const OperatorMetricSpace> src,
                              std::shared_ptr<const OperatorMetricSpace> tgt) {
  const auto& a = detail::field(j, "assign", "map");
  if (!a.is_object()) detail::bad_field("map.assign", "expected an object keyed by source point name");
  std::vector<PointId> assign(src->size(), 0);
  for (const auto& [name, val] : a.items()) {
    const std::string w = "map.assign." + name;
    if (!val.is_string()) detail::bad_field(w, "expected a target point name");
    assign[point_by_name(*src, name, w)] = point_by_name(*tgt, val.get<std::string>(), w);
  }
  if (assign[0] != 0) detail::bad_field("map.assign", "the basepoint must map to the basepoint");
  return {std::move(src), std::move(tgt), std::move(assign)};
}

/// {"parent": [0, p1, ...], "weights": [...]} with the root at index 0.
inline RootedTree tree_from_json(const Json& j) {
  RootedTree t;
  const auto& p = detail::field(j, "parent", "tree");
  if (!p.is_array()) detail::bad_field("tree.parent", "expected an array of vertex indices");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p[i].is_number_unsigned()) detail::bad_field("tree.parent[" + std::to_string(i) + "]", "expected a vertex index");
    t.parent.push_back(p[i].get<std::size_t>());
  }
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    if (!w.is_array()) detail::bad_field("tree.weights", "expected an array");
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!w[i].is_number()) detail::bad_field("tree.weights[" + std::to_string(i) + "]", "expected a number");
      t.weights.push_back(w[i].get<double>());
    }
  }
  t.validate();
  return t;
}

/// Shortest round-trip decimal form with 17 significant digits.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// RFC 4180 rows; fields with a comma, quote or line break are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  static std::string escape(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string q = "\"";
    for (char c : f) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << escape(fields[i]);
    out_ << "\r\n";
  }

 private:
  std::ostream& out_;
};

inline std::vector<std::string> bracket_csv_header() {
  return {"space", "n", "m", "lower", "upper", "gap", "sampled", "seed"};
}

inline std::vector<std::string> bracket_csv_row(const std::string& space, std::size_t n, std::size_t m,
                                                const NormBracket& b) {
  return {space, std::to_string(n), std::to_string(m), format_double(b.lower), format_double(b.upper),
          format_double(b.gap), b.sampled ? "true" : "false", std::to_string(b.seed)};
}

}  // namespace opfree

#endif  // OPFREE_IO_HPP
