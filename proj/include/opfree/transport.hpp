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

#ifndef OPFREE_TRANSPORT_HPP
#define OPFREE_TRANSPORT_HPP

#include <limits>
#include <vector>

#include "opfree/molecule.hpp"

namespace opfree {

inline constexpr std::size_t kTransportMaxPoints = 64;

struct TransportFlow {
  PointId from;  // receives +amount
  PointId to;    // receives -amount
  double amount;
};

/// An optimal plan: mu = sum amount (delta_from - delta_to), cost = sum amount d(from, to).
struct TransportPlan {
  double cost = 0.0;
  std::vector<TransportFlow> flows;
};

/// Level-1 distance table d(p, q) = ||x_p - x_q||.
inline std::vector<double> level_one_distances(const OperatorMetricSpace& x) {
  const std::size_t n = x.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q)
      d[p * n + q] = d[q * n + p] = spectral_norm(x.point(p) - x.point(q));
  return d;
}

namespace detail {

// Min-cost transportation by successive shortest paths (Bellman-Ford on the
// residual network, so negative reduced costs need no potentials).
inline TransportPlan transport(const std::vector<double>& supply, const std::vector<double>& dist,
                               std::size_t n) {
  std::vector<std::size_t> src, dst;
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    if (supply[p] > 0) {
      src.push_back(p);
      total += supply[p];
    } else if (supply[p] < 0) {
      dst.push_back(p);
    }
  }
  TransportPlan plan;
  if (src.empty()) return plan;
  const double eps = 1e-15 * total;

  // Nodes: 0 source, 1..S supplies, S+1..S+D demands, S+D+1 sink.
  const std::size_t ns = src.size(), nd = dst.size(), sink = ns + nd + 1, nodes = sink + 1;
  struct Arc {
    std::size_t to;
    double cap;
    double cost;
  };
  std::vector<Arc> arcs;
  std::vector<std::vector<std::size_t>> out(nodes);
  auto add = [&](std::size_t u, std::size_t v, double cap, double cost) {
    out[u].push_back(arcs.size());
    arcs.push_back({v, cap, cost});
    out[v].push_back(arcs.size());
    arcs.push_back({u, 0.0, -cost});
  };
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ns; ++i) add(0, 1 + i, supply[src[i]], 0.0);
  std::vector<std::size_t> mid;
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < nd; ++j) {
      mid.push_back(arcs.size());
      add(1 + i, 1 + ns + j, inf, dist[src[i] * n + dst[j]]);
    }
  for (std::size_t j = 0; j < nd; ++j) add(1 + ns + j, sink, -supply[dst[j]], 0.0);

  double remaining = total;
  for (std::size_t round = 0; remaining > eps; ++round) {
    if (round > 16 * (arcs.size() + 4)) throw InternalError("transport did not terminate");
    std::vector<double> dd(nodes, inf);
    std::vector<std::size_t> via(nodes, ~std::size_t{0});
    dd[0] = 0.0;
    for (std::size_t it = 0; it < nodes; ++it) {
      bool changed = false;
      for (std::size_t u = 0; u < nodes; ++u) {
        if (dd[u] == inf) continue;
        for (std::size_t a : out[u]) {
          if (arcs[a].cap <= eps) continue;
          const double nv = dd[u] + arcs[a].cost;
          if (nv < dd[arcs[a].to] - 1e-15 * (1.0 + std::abs(nv))) {
            dd[arcs[a].to] = nv;
            via[arcs[a].to] = a;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dd[sink] == inf) throw InternalError("transport: divergence cannot be balanced");
    double push = remaining;
    for (std::size_t v = sink; v != 0; v = arcs[via[v] ^ 1].to) push = std::min(push, arcs[via[v]].cap);
    for (std::size_t v = sink; v != 0; v = arcs[via[v] ^ 1].to) {
      arcs[via[v]].cap -= push;
      arcs[via[v] ^ 1].cap += push;
    }
    remaining -= push;
  }

  std::size_t idx = 0;
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < nd; ++j) {
      const double f = arcs[mid[idx++] ^ 1].cap;
      if (f > eps) {
        plan.flows.push_back({static_cast<PointId>(src[i]), static_cast<PointId>(dst[j]), f});
        plan.cost += f * dist[src[i] * n + dst[j]];
      }
    }
  return plan;
}

}  // namespace detail

/// Exact level-1 norm of a real molecule as a min-cost transport problem,
/// with the basepoint absorbing the total mass. Complex molecules are
/// rejected: their transport cost is not a linear program.
inline TransportPlan kantorovich_plan(const Molecule& mu, const OperatorMetricSpace& x,
                                      const std::vector<double>& dist) {
  if (x.size() > kTransportMaxPoints) throw InvalidInput("transport oracle is limited to 64 points");
  if (!mu.is_real()) throw InvalidInput("transport oracle needs a real molecule");
  mu.check(x);
  std::vector<double> supply(x.size(), 0.0);
  double balance = 0.0;
  for (const auto& [p, a] : mu.terms()) {
    supply[p] = a.real();
    balance += a.real();
  }
  supply[0] = -balance;
  return detail::transport(supply, dist, x.size());
}

inline TransportPlan kantorovich_plan(const Molecule& mu, const OperatorMetricSpace& x) {
  return kantorovich_plan(mu, x, level_one_distances(x));
}

inline double kantorovich_lp(const Molecule& mu, const OperatorMetricSpace& x) {
  return kantorovich_plan(mu, x).cost;
}

}  // namespace opfree

#endif  // OPFREE_TRANSPORT_HPP
