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

// One line per acceptance criterion; failing checks are listed underneath.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "opfree/verify.hpp"

int main(int argc, char** argv) {
  opfree::VerifyConfig cfg;
  for (int i = 1; i < argc; ++i) cfg.only.push_back(std::atoi(argv[i]));
  std::vector<opfree::CriterionResult> results;
  try {
    results = opfree::run_verify(cfg, [](const opfree::CriterionResult& r) {
      std::fprintf(stderr, "  finished criterion %d in %.1f s\n", r.id, r.seconds);
    });
  } catch (const opfree::InvariantViolation& e) {
    std::printf("FAIL internal invariant violated: %s\n", e.what());
    return 3;
  }
  bool all = true;
  double total = 0.0;
  for (const auto& r : results) {
    std::size_t failed = 0;
    for (const auto& row : r.rows) failed += row.pass ? 0 : 1;
    std::printf("criterion %2d %-14s %s  (%zu checks, %zu failed, %.1f s)%s%s\n", r.id,
                opfree::criterion_titles()[static_cast<std::size_t>(r.id - 1)].second.c_str(), r.pass ? "PASS" : "FAIL",
                r.rows.size(), failed, r.seconds, r.summary.empty() ? "" : "  ", r.summary.c_str());
    std::size_t shown = 0;
    for (const auto& row : r.rows)
      if (!row.pass && shown++ < 10)
        std::printf("    %s: expected %s, got %s (tol %s)\n", row.name.c_str(), row.expected.c_str(), row.got.c_str(),
                    opfree::format_double(row.tol).c_str());
    all = all && r.pass;
    total += r.seconds;
  }
  std::printf("%s: %zu criteria in %.1f s\n", all ? "ALL PASS" : "SOME FAILED", results.size(), total);
  return all ? 0 : 1;
}
