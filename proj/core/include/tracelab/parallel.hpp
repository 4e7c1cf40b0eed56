#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace tracelab {

// Worker count: TRACE_LAB_THREADS caps (or raises) the default of
// hardware_concurrency.  A value of 1 disables threading entirely.
inline int thread_cap() {
  if (const char* env = std::getenv("TRACE_LAB_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? int(hc) : 1;
}

// Runs body(i) for i in [0, n).  Work is handed out in grains through an
// atomic cursor; callers must write results into index-addressed slots and
// reduce sequentially afterwards, which keeps every reported number
// independent of scheduling and of the worker count.
template <class Body>
void parallel_for(std::size_t n, const Body& body, std::size_t grain = 64) {
  const int workers = thread_cap();
  if (workers <= 1 || n <= grain) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  auto drain = [&] {
    for (;;) {
      const std::size_t begin = cursor.fetch_add(grain);
      if (begin >= n) return;
      const std::size_t end = begin + grain < n ? begin + grain : n;
      for (std::size_t i = begin; i < end; ++i) body(i);
    }
  };
  std::vector<std::thread> pool;
  const int spawned = workers - 1;
  pool.reserve(spawned);
  for (int w = 0; w < spawned; ++w) pool.emplace_back(drain);
  drain();
  for (auto& t : pool) t.join();
}

}  // namespace tracelab
