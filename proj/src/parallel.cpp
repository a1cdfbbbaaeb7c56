#include "effectop/parallel.hpp"

#include <atomic>

namespace effectop {

namespace {
std::atomic<int> g_threads{0};  // 0 = use hardware concurrency
}

int thread_count() {
  const int k = g_threads.load();
  if (k > 0) return k;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_thread_count(int k) { g_threads.store(k); }

}  // namespace effectop
