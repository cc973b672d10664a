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

#ifndef OPFREE_PARALLEL_HPP
#define OPFREE_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace opfree {

/// Worker count: OPFREE_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
inline std::size_t thread_count() {
  if (const char* env = std::getenv("OPFREE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(begin, end) over contiguous chunks of [0, count). Exceptions from
/// workers are rethrown on the calling thread (first chunk wins).
template <typename Fn>
void parallel_chunks(std::size_t count, Fn&& fn, std::size_t min_chunk = 2048) {
  const std::size_t workers =
      std::min(thread_count(), std::max<std::size_t>(1, count / min_chunk));
  if (workers <= 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t step = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = std::min(count, w * step);
    const std::size_t hi = std::min(count, lo + step);
    pool.emplace_back([&, w, lo, hi] {
      try {
        fn(lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct ArgMax {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t index = std::numeric_limits<std::size_t>::max();
};

/// Maximum of fn(i) over [0, count); ties resolve to the lowest index, so the
/// result does not depend on the worker count.
template <typename Fn>
ArgMax parallel_argmax(std::size_t count, Fn&& fn, std::size_t min_chunk = 2048) {
  const std::size_t workers =
      std::min(thread_count(), std::max<std::size_t>(1, count / min_chunk));
  std::vector<ArgMax> partial(std::max<std::size_t>(1, workers));
  const std::size_t step = (count + partial.size() - 1) / partial.size();
  parallel_chunks(
      count,
      [&](std::size_t lo, std::size_t hi) {
        ArgMax best;
        for (std::size_t i = lo; i < hi; ++i) {
          const double v = fn(i);
          if (v > best.value) best = {v, i};
        }
        partial[step == 0 ? 0 : lo / step] = best;
      },
      min_chunk);
  ArgMax best;
  for (const auto& p : partial)
    if (p.value > best.value || (p.value == best.value && p.index < best.index))
      best = p;
  return best;
}

}  // namespace opfree

#endif  // OPFREE_PARALLEL_HPP
