#pragma once

#include <cstdint>
#include <functional>

namespace histoconv {

// Worker-thread cap. Defaults to HISTOCONV_THREADS (if set) or the hardware
// thread count; set_max_threads overrides it at runtime.
int max_threads();
void set_max_threads(int n);

namespace detail {
void pool_run(std::int64_t n, std::int64_t grain,
              const std::function<void(std::int64_t, std::int64_t)>& body);
}

// Runs body(begin, end) over a static partition of [0, n). Each index lands
// in exactly one chunk, and chunks are formed the same way for any worker
// count, so disjoint-write bodies give deterministic results. Small ranges
// (n <= grain) run inline on the calling thread.
template <typename F>
void parallel_for(std::int64_t n, F&& body, std::int64_t grain = 1024) {
  if (n <= 0) return;
  if (n <= grain || max_threads() <= 1) {
    body(std::int64_t{0}, n);
    return;
  }
  detail::pool_run(n, grain, body);
}

}  // namespace histoconv
