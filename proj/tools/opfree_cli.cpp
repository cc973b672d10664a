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

// Command-line front end. Exit codes: 0 success, 1 a check failed,
// 2 bad input, 3 an internal invariant was violated.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "opfree/io.hpp"
#include "opfree/verify.hpp"

namespace {

using opfree::Json;

enum Exit { kOk = 0, kCheckFailed = 1, kBadInput = 2, kInternal = 3 };

struct Common {
  std::size_t level = 1;
  std::string pairs = "full";
  std::uint64_t seed = 0;
  double tol = 1e-8;
  bool json = false;
  std::string csv;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--level,-n", c.level, "matrix level n")->check(CLI::PositiveNumber);
  app->add_option("--pairs", c.pairs, "constraint pairs: full or sample:K");
  app->add_option("--seed", c.seed, "seed for every randomized step");
  app->add_option("--tol", c.tol, "barrier duality-gap tolerance")->check(CLI::PositiveNumber);
  app->add_flag("--json", c.json, "machine-readable output");
  app->add_option("--csv", c.csv, "write a CSV report to this path");
}

opfree::PairMode pair_mode(const Common& c) {
  if (c.pairs == "full") return opfree::PairMode::full();
  const std::string prefix = "sample:";
  if (c.pairs.rfind(prefix, 0) == 0) {
    const std::string k = c.pairs.substr(prefix.size());
    if (!k.empty() && k.find_first_not_of("0123456789") == std::string::npos)
      return opfree::PairMode::sample(std::stoull(k), c.seed);
  }
  throw opfree::InvalidInput("--pairs: expected 'full' or 'sample:K', got '" + c.pairs + "'");
}

std::shared_ptr<const opfree::OperatorMetricSpace> load_space(const std::string& path) {
  return opfree::to_space(opfree::space_document_from_json(opfree::read_json_file(path)));
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

class Csv {
 public:
  explicit Csv(const std::string& path) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw opfree::InvalidInput("--csv: cannot write '" + path + "'");
    writer_ = std::make_unique<opfree::CsvWriter>(file_);
  }
  void row(const std::vector<std::string>& f) {
    if (writer_) writer_->row(f);
  }

 private:
  std::ofstream file_;
  std::unique_ptr<opfree::CsvWriter> writer_;
};

void print(const Common& c, const Json& j, const std::string& text) {
  if (c.json)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << text << "\n";
}

std::string num(double v) { return opfree::format_double(v); }

/// "a" is the constant grid; "a,b,c,d" lists n*n cells row-major.
opfree::MatrixPoint grid_arg(const opfree::OperatorMetricSpace& x, const std::string& arg, std::size_t n) {
  std::vector<std::string> names;
  std::stringstream ss(arg);
  for (std::string s; std::getline(ss, s, ',');) names.push_back(s);
  if (names.size() == 1) names.assign(n * n, names[0]);
  if (names.size() != n * n)
    throw opfree::InvalidInput("grid '" + arg + "': expected 1 or " + std::to_string(n * n) + " point names");
  std::vector<opfree::PointId> cells;
  for (const auto& s : names) cells.push_back(opfree::point_by_name(x, s, "grid"));
  return {n, std::move(cells)};
}

Json bracket_json(const opfree::NormBracket& b) {
  return {{"lower", b.lower},
          {"upper", b.upper},
          {"gap", b.gap},
          {"sampled", b.sampled},
          {"certified", b.certified},
          {"k", b.k_used},
          {"seed", b.seed},
          {"upper_strategy", b.upper_witness.strategy},
          {"residual", b.residual},
          {"barrier_solves", b.barrier_solves},
          {"newton_steps", b.newton_steps},
          {"constraints", b.constraints},
          {"stalled", b.stalled},
          {"diagnostic", b.diagnostic}};
}

int run(int argc, char** argv) {
  CLI::App app{"Norm brackets for n-Lipschitz-free operator spaces of finite matrix sets"};
  app.require_subcommand(1);
  Common c;
  std::string space_path, target_path, map_path, function_path, molecule_path, tree_path, point_a, point_b, only;
  std::size_t samples = 10, path_k = 2;
  double max_mismatch = 0.1;
  int code = kOk;

  auto* space = app.add_subcommand("space", "operations on space files");
  space->require_subcommand(1);
  auto* validate = space->add_subcommand("validate", "parse and check a space file");
  validate->add_option("path", space_path, "space JSON")->required();
  add_common(validate, c);
  validate->callback([&] {
    const auto x = load_space(space_path);
    print(c, {{"ok", true}, {"points", x->size()}, {"ambient_dim", x->ambient_dim()}},
          "ok, |X|=" + std::to_string(x->size()) + ", d=" + std::to_string(x->ambient_dim()));
  });

  auto* dist = app.add_subcommand("dist", "amplified distance ||[a_ij - b_ij]|| at level n");
  dist->add_option("--space", space_path)->required();
  dist->add_option("a", point_a, "point name or n*n comma-separated names")->required();
  dist->add_option("b", point_b)->required();
  add_common(dist, c);
  dist->callback([&] {
    const auto x = load_space(space_path);
    const double d = opfree::amplified_distance(*x, grid_arg(*x, point_a, c.level), grid_arg(*x, point_b, c.level));
    print(c, {{"distance", d}, {"level", c.level}}, num(d));
  });

  auto* lip = app.add_subcommand("lipconst", "Lip_n of a function (--function) or a map (--map, --target)");
  lip->add_option("--space", space_path)->required();
  lip->add_option("--function", function_path);
  lip->add_option("--map", map_path);
  lip->add_option("--target", target_path);
  add_common(lip, c);
  lip->callback([&] {
    const auto x = load_space(space_path);
    const auto pairs = opfree::constraint_pairs(*x, c.level, pair_mode(c));
    opfree::LipResult r;
    if (!function_path.empty() == !map_path.empty())
      throw opfree::InvalidInput("lipconst: give exactly one of --function and --map");
    if (!function_path.empty()) {
      r = opfree::lip_constant(opfree::function_from_json(opfree::read_json_file(function_path), *x), pairs);
    } else {
      const auto y = target_path.empty() ? x : load_space(target_path);
      r = opfree::map_lip_constant(opfree::map_from_json(opfree::read_json_file(map_path), x, y), pairs);
    }
    print(c, {{"lip", r.value}, {"level", c.level}, {"sampled", r.sampled}},
          num(r.value) + (r.sampled ? " (sampled pairs: lower bound)" : ""));
  });

  auto* distortion = app.add_subcommand("distortion", "Lip_n(L) Lip_n(L^-1) of a bijective map");
  distortion->add_option("--space", space_path)->required();
  distortion->add_option("--target", target_path);
  distortion->add_option("--map", map_path)->required();
  add_common(distortion, c);
  distortion->callback([&] {
    const auto x = load_space(space_path);
    const auto y = target_path.empty() ? x : load_space(target_path);
    const auto d = opfree::map_distortion(opfree::map_from_json(opfree::read_json_file(map_path), x, y), c.level);
    print(c, {{"lip", d.forward.value}, {"lip_inverse", d.backward.value}, {"distortion", d.value()}},
          "Lip " + num(d.forward.value) + ", Lip of inverse " + num(d.backward.value) + ", distortion " +
              num(d.value()));
  });

  auto bracket_cmd = [&](bool detailed) {
    const auto x = load_space(space_path);
    const auto mu = opfree::matrix_molecule_from_json(opfree::read_json_file(molecule_path), *x);
    opfree::BracketOptions o;
    o.pairs = pair_mode(c);
    o.dual.seed = o.primal.seed = c.seed;
    o.dual.barrier.gap_tol = c.tol;
    const auto b = opfree::norm_bracket(mu, *x, c.level, o);
    Csv csv(c.csv);
    csv.row(opfree::bracket_csv_header());
    csv.row(opfree::bracket_csv_row(stem(space_path), c.level, mu.size(), b));
    std::string text = "[" + num(b.lower) + ", " + num(b.upper) + "]";
    if (b.sampled) text += " (sampled pairs: the lower side is not certified)";
    if (detailed) {
      text += "\n  gap " + num(b.gap) + "\n  lower witness: k = " + std::to_string(b.k_used) + ", " +
              std::to_string(b.barrier_solves) + " barrier solves, " + std::to_string(b.newton_steps) +
              " Newton steps, " + std::to_string(b.constraints) + " constraints" + (b.stalled ? ", stalled" : "") +
              "\n  upper factorization: " + b.upper_witness.strategy + ", " +
              std::to_string(b.upper_witness.blocks.size()) + " blocks, residual " + num(b.residual) +
              "\n  seed " + std::to_string(b.seed);
      if (!b.diagnostic.empty()) text += "\n  " + b.diagnostic;
    }
    print(c, bracket_json(b), text);
  };
  for (auto [name, detailed] : {std::pair{"freenorm", false}, std::pair{"bracket", true}}) {
    auto* sub = app.add_subcommand(name, detailed ? "norm bracket with solver diagnostics" : "norm bracket of a molecule");
    sub->add_option("--space", space_path)->required();
    sub->add_option("--molecule", molecule_path)->required();
    add_common(sub, c);
    sub->callback([&, detailed = detailed] { bracket_cmd(detailed); });
  }

  auto* lift = app.add_subcommand("lift-check", "compare the lifted map's norm with Lip_n(L)");
  lift->add_option("--space", space_path)->required();
  lift->add_option("--target", target_path);
  lift->add_option("--map", map_path)->required();
  lift->add_option("--samples", samples)->check(CLI::PositiveNumber);
  add_common(lift, c);
  lift->callback([&] {
    const auto x = load_space(space_path);
    const auto y = target_path.empty() ? x : load_space(target_path);
    opfree::LiftCheckOptions o;
    o.samples = samples;
    o.seed = c.seed;
    o.bracket.dual.barrier.gap_tol = c.tol;
    const auto r = opfree::lift_contractivity_check(opfree::map_from_json(opfree::read_json_file(map_path), x, y),
                                                    c.level, o);
    Csv csv(c.csv);
    csv.row({"sample", "lower_image", "upper_source", "pass"});
    for (std::size_t s = 0; s < r.samples.size(); ++s)
      csv.row({std::to_string(s), num(r.samples[s].lower_image), num(r.samples[s].upper_source),
               r.samples[s].pass ? "true" : "false"});
    print(c,
          {{"lip", r.lip.value}, {"max_excess", r.max_excess}, {"witness_ratio", r.witness_ratio},
           {"contractive", r.contractive}, {"witnessed", r.witnessed}, {"pass", r.pass}},
          "Lip_n(L) " + num(r.lip.value) + ", worst excess " + num(r.max_excess) + ", witness ratio " +
              num(r.witness_ratio) + ": " + (r.pass ? "pass" : "FAIL"));
    if (!r.pass) code = kCheckFailed;
  });

  auto* tree = app.add_subcommand("tree-demo", "F^n of a rooted tree against MAX(l1^k)");
  tree->add_option("--tree", tree_path, "tree JSON with a parent array");
  tree->add_option("--path", path_k, "use the path on k+1 vertices")->check(CLI::PositiveNumber);
  tree->add_option("--samples", samples)->check(CLI::PositiveNumber);
  tree->add_option("--max-mismatch", max_mismatch)->check(CLI::PositiveNumber);
  add_common(tree, c);
  tree->callback([&] {
    const auto t = tree_path.empty() ? opfree::RootedTree::path(path_k)
                                     : opfree::tree_from_json(opfree::read_json_file(tree_path));
    opfree::TreeCheckOptions o;
    o.samples = samples;
    o.seed = o.max_lower.seed = c.seed;
    o.max_mismatch = max_mismatch;
    o.bracket.pairs = pair_mode(c);
    o.bracket.dual.barrier.gap_tol = c.tol;
    const auto r = opfree::tree_freespace_check(t, c.level, o);
    Csv csv(c.csv);
    csv.row({"sample", "free_lower", "free_upper", "max_lower", "max_upper", "overlap", "mismatch", "pass"});
    Json js = Json::array();
    std::string text = "tree with k=" + std::to_string(t.k()) + " at n=" + std::to_string(c.level) + ": family " +
                       std::to_string(r.family_size) + " tuples, ambient dimension " +
                       std::to_string(r.ambient_dim) + ", size cap " + std::to_string(r.size_cap);
    for (std::size_t s = 0; s < r.samples.size(); ++s) {
      const auto& m = r.samples[s];
      csv.row({std::to_string(s), num(m.free_bracket.lower), num(m.free_bracket.upper), num(m.max_lower),
               num(m.max_upper), m.overlap ? "true" : "false", num(m.mismatch), m.pass ? "true" : "false"});
      js.push_back({{"free", {m.free_bracket.lower, m.free_bracket.upper}},
                    {"max", {m.max_lower, m.max_upper}},
                    {"overlap", m.overlap},
                    {"mismatch", m.mismatch}});
      text += "\n  " + std::to_string(s) + ": F [" + num(m.free_bracket.lower) + ", " + num(m.free_bracket.upper) +
              "]  MAX [" + num(m.max_lower) + ", " + num(m.max_upper) + "]  mismatch " + num(m.mismatch) +
              (m.pass ? "" : "  FAIL");
    }
    text += "\nmax mismatch " + num(r.max_mismatch) + ": " + (r.pass ? "pass" : "FAIL");
    print(c, {{"samples", js}, {"max_mismatch", r.max_mismatch}, {"family_size", r.family_size}, {"pass", r.pass}},
          text);
    if (!r.pass) code = kCheckFailed;
  });

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--only", only, "comma-separated criterion ids");
  add_common(verify, c);
  verify->callback([&] {
    opfree::VerifyConfig cfg;
    cfg.seed = c.seed;
    std::stringstream ss(only);
    for (std::string s; std::getline(ss, s, ',');) {
      if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw opfree::InvalidInput("--only: expected criterion ids, got '" + s + "'");
      cfg.only.push_back(std::stoi(s));
    }
    const auto results = opfree::run_verify(cfg, [&](const opfree::CriterionResult& r) {
      if (!c.json)
        std::cout << "criterion " << r.id << " " << (r.pass ? "PASS" : "FAIL") << "  " << r.title << " ("
                  << r.rows.size() << " checks)" << std::endl;
    });
    Csv csv(c.csv);
    csv.row({"name", "expected", "got", "tol", "pass"});
    Json js = Json::array();
    bool all = true;
    for (const auto& r : results) {
      for (const auto& row : r.rows) csv.row({row.name, row.expected, row.got, num(row.tol), row.pass ? "true" : "false"});
      js.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"checks", r.rows.size()}, {"summary", r.summary}});
      all = all && r.pass;
    }
    if (c.json) std::cout << Json{{"criteria", js}, {"pass", all}}.dump(2) << "\n";
    else std::cout << (all ? "all criteria pass" : "some criteria FAILED") << "\n";
    if (!all) code = kCheckFailed;
  });

  auto* report = app.add_subcommand("report", "points, level-1 distances and pair counts of a space");
  report->add_option("--space", space_path)->required();
  add_common(report, c);
  report->callback([&] {
    const auto x = load_space(space_path);
    const auto dist = opfree::level_one_distances(*x);
    const std::size_t p = x->size();
    Csv csv(c.csv);
    csv.row({"a", "b", "distance"});
    std::string text = "|X|=" + std::to_string(p) + ", d=" + std::to_string(x->ambient_dim()) + ", basepoint " +
                       x->label(0) + "\nlevel-1 distances:";
    Json rows = Json::array();
    for (std::size_t a = 0; a < p; ++a) {
      text += "\n  " + x->label(a) + ":";
      for (std::size_t b = 0; b < p; ++b) {
        text += " " + num(dist[a * p + b]);
        if (a < b) {
          csv.row({x->label(a), x->label(b), num(dist[a * p + b])});
          rows.push_back({x->label(a), x->label(b), dist[a * p + b]});
        }
      }
    }
    Json counts = Json::object();
    for (std::size_t n = 1; n <= c.level; ++n) {
      const auto g = opfree::grid_count(p, n);
      const std::string cnt = g ? std::to_string(*g) : "overflow";
      counts[std::to_string(n)] = cnt;
      text += "\nlevel " + std::to_string(n) + ": " + cnt + " matrix points";
    }
    print(c, {{"points", x->labels()}, {"distances", rows}, {"grids", counts}}, text);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const opfree::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const opfree::DegenerateInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const opfree::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << " (try --pairs sample:K)\n";
    return kBadInput;
  } catch (const opfree::InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return kInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
