#pragma once

#include <algorithm>
#include <functional>
#include <future>
#include <thread>
#include <vector>

namespace effectop {

/// Process-wide worker budget for ensemble/sweep parallelism (CLI --threads).
int thread_count();
void set_thread_count(int k);

/// Run fn(i) for i in [0, n).  Work is partitioned by index, results must be
/// written to per-index slots by the caller; the reduction order elsewhere
/// stays serial so outputs are bit-identical for any thread count.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> futs;
  futs.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    futs.push_back(std::async(std::launch::async, [&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    }));
  }
  for (auto& f : futs) f.get();
}

}  // namespace effectop
