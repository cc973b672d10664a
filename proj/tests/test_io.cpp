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

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "opfree/io.hpp"

namespace {

using opfree::Complex;
using opfree::Json;

const char* kThree = R"({
  "ambient_dim": 2,
  "basepoint": "o",
  "points": [
    {"name": "a", "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
    {"name": "o", "matrix": [[0, 0], [0, 0]]},
    {"name": "b", "matrix": [[[0, 0], [0.1, -2.5]], [[0, 0], [3, 0]]]}
  ]
})";

TEST(SpaceDocument, ParsesAndMovesBasepointFirst) {
  const auto doc = opfree::space_document_from_json(opfree::parse_json(kThree));
  EXPECT_EQ(doc.ambient_dim, 2u);
  EXPECT_EQ(doc.names, (std::vector<std::string>{"a", "o", "b"}));
  EXPECT_EQ(doc.points[2](0, 1), Complex(0.1, -2.5));
  const auto x = opfree::to_space(doc);
  EXPECT_EQ(x->size(), 3u);
  EXPECT_EQ(x->label(0), "o");
  EXPECT_EQ(x->label(1), "a");
  EXPECT_TRUE(x->point(0).isZero(0.0));
}

TEST(SpaceDocument, RoundTripIsExact) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  opfree::SpaceDocument doc{3, {"p", "q", "r"}, {}, "q"};
  for (int i = 0; i < 3; ++i) {
    opfree::CMatrix m(3, 3);
    for (Eigen::Index c = 0; c < m.size(); ++c) m(c) = Complex(g(rng), 1e-300 * g(rng));
    doc.points.push_back(m);
  }
  const std::string text = opfree::space_document_to_json(doc).dump();
  const auto back = opfree::space_document_from_json(opfree::parse_json(text));
  EXPECT_TRUE(back == doc);
  EXPECT_EQ(opfree::space_document_to_json(back).dump(), text);
}

TEST(SpaceDocument, Diagnostics) {
  auto msg = [](const std::string& text) {
    try {
      opfree::space_document_from_json(opfree::parse_json(text, "f.json"));
    } catch (const opfree::InvalidInput& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string dup = R"({"ambient_dim": 1, "basepoint": "o", "points": [
      {"name": "o", "matrix": [[0]]}, {"name": "o", "matrix": [[1]]}]})";
  EXPECT_NE(msg(dup).find("space.points[1].name: duplicate point name 'o'"), std::string::npos) << msg(dup);
  EXPECT_NE(msg("{\n\"ambient_dim\": 1,\n oops}").find("line 3"), std::string::npos);
  const std::string rows = R"({"ambient_dim": 2, "basepoint": "o", "points": [
      {"name": "o", "matrix": [[0]]}, {"name": "a", "matrix": [[1]]}]})";
  EXPECT_NE(msg(rows).find("space.points[0].matrix: expected 2 rows"), std::string::npos) << msg(rows);
  const std::string base = R"({"ambient_dim": 1, "basepoint": "z", "points": [
      {"name": "o", "matrix": [[0]]}, {"name": "a", "matrix": [[1]]}]})";
  EXPECT_NE(msg(base).find("unknown point 'z'"), std::string::npos);
  EXPECT_NE(msg(R"({"ambient_dim": 1, "basepoint": "o"})").find("missing field 'points'"), std::string::npos);
}

TEST(Molecules, ScalarAndMatrix) {
  const auto x = opfree::to_space(opfree::space_document_from_json(opfree::parse_json(kThree)));
  const auto mu = opfree::matrix_molecule_from_json(
      opfree::parse_json(R"({"terms": [{"point": "a", "coef": 2}, {"point": "b", "coef": [0, -1]}, {"point": "o", "coef": 5}]})"), *x);
  EXPECT_EQ(mu.size(), 1u);
  EXPECT_EQ(mu.at(0, 0), (opfree::Molecule{{1, 2.0}, {2, Complex(0, -1)}}));
  const Json mj = opfree::parse_json(R"({"matrix": [[{"terms": [{"point": "a", "coef": 1}]}, {"terms": []}],
                                                     [{"terms": []}, {"terms": [{"point": "b", "coef": -1}]}]]})");
  const auto nu = opfree::matrix_molecule_from_json(mj, *x);
  EXPECT_EQ(nu.size(), 2u);
  EXPECT_EQ(nu.at(1, 1), (opfree::Molecule{{2, -1.0}}));
  EXPECT_EQ(opfree::matrix_molecule_from_json(opfree::matrix_molecule_to_json(nu, *x), *x), nu);
  EXPECT_THROW(opfree::matrix_molecule_from_json(opfree::parse_json(R"({"terms": [{"point": "zz", "coef": 1}]})"), *x),
               opfree::InvalidInput);
}

TEST(Functions, ScalarAndMatrixValues) {
  const auto x = opfree::to_space(opfree::space_document_from_json(opfree::parse_json(kThree)));
  const auto f = opfree::function_from_json(opfree::parse_json(R"({"values": {"a": [1, 2], "b": 3}})"), *x);
  EXPECT_EQ(f.k(), 1u);
  EXPECT_EQ(f.at(1)(0, 0), Complex(1, 2));
  const auto g = opfree::function_from_json(
      opfree::parse_json(R"({"k": 2, "values": {"b": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}})"), *x);
  EXPECT_EQ(g.at(2), opfree::CMatrix::Identity(2, 2));
  EXPECT_THROW(opfree::function_from_json(opfree::parse_json(R"({"values": {"o": 1}})"), *x), opfree::InvalidInput);
}

TEST(Maps, AssignByName) {
  const auto x = opfree::to_space(opfree::space_document_from_json(opfree::parse_json(kThree)));
  const auto l = opfree::map_from_json(opfree::parse_json(R"({"assign": {"a": "b", "b": "a"}})"), x, x);
  EXPECT_EQ(l.assignment, (std::vector<opfree::PointId>{0, 2, 1}));
  EXPECT_THROW(opfree::map_from_json(opfree::parse_json(R"({"assign": {"o": "a"}})"), x, x), opfree::InvalidInput);
}

TEST(Trees, ParentArray) {
  const auto t = opfree::tree_from_json(opfree::parse_json(R"({"parent": [0, 0, 1]})"));
  EXPECT_EQ(t.k(), 2u);
  EXPECT_EQ(t.distance(0, 2), 2.0);
  EXPECT_THROW(opfree::tree_from_json(opfree::parse_json(R"({"parent": [0, 2, 1]})")), opfree::InvalidInput);
  EXPECT_THROW(opfree::tree_from_json(opfree::parse_json(R"({"parent": [0, -1]})")), opfree::InvalidInput);
}

TEST(Csv, SeventeenDigitsRoundTrip) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 40 - 20);
    EXPECT_EQ(std::strtod(opfree::format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(opfree::format_double(0.1), "0.10000000000000001");
}

TEST(Csv, QuotesAsRfc4180) {
  std::ostringstream out;
  opfree::CsvWriter w(out);
  w.row({"plain", "a,b", "say \"hi\"", "two\nlines"});
  EXPECT_EQ(out.str(), "plain,\"a,b\",\"say \"\"hi\"\"\",\"two\nlines\"\r\n");
}

TEST(Csv, BracketRow) {
  opfree::NormBracket b;
  b.lower = 2.0;
  b.upper = 3.0;
  b.gap = 1.0;
  b.seed = 7;
  EXPECT_EQ(opfree::bracket_csv_row("P3", 1, 1, b),
            (std::vector<std::string>{"P3", "1", "1", "2", "3", "1", "false", "7"}));
}

}  // namespace
