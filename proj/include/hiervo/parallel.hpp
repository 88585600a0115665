#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace hiervo {

/// Worker count: HIERVO_THREADS when set, otherwise 1.
inline int thread_count() {
  if (const char* env = std::getenv("HIERVO_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

/// Static row split; results are independent of the thread count.
template <class Fn>
void parallel_for(int begin, int end, Fn&& fn) {
  const int n = thread_count();
  if (n <= 1 || end - begin <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  const int total = end - begin;
  const int chunk = (total + n - 1) / n;
  for (int w = 0; w < n; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace hiervo
