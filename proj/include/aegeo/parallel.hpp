#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace aegeo {

inline int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* e = std::getenv("AEGEO_THREADS")) {
    int cap = std::atoi(e);
    if (cap > 0 && (n <= 0 || cap < n)) n = cap;
  }
  return n > 0 ? n : 1;
}

// Calls f(i) for i in [0, n); each index is written by exactly one worker.
template <typename F>
void parallel_for(long n, F&& f) {
  int w = worker_count();
  if (w <= 1 || n < 64) {
    for (long i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  long chunk = (n + w - 1) / w;
  for (int t = 0; t < w; ++t) {
    long a = t * chunk, b = std::min(n, a + chunk);
    if (a >= b) break;
    pool.emplace_back([&f, a, b] {
      for (long i = a; i < b; ++i) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace aegeo
