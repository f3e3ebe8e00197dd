#include "nlslab/parallel.hpp"

#include <algorithm>
#include <cstdlib>

namespace nlslab {

int worker_count() {
  static const int count = [] {
    if (const char* env = std::getenv("NLSLAB_WORKERS")) {
      const int w = std::atoi(env);
      if (w >= 1 && w <= 64) return w;
    }
    return 2;
  }();
  return count;
}

namespace {
thread_local int t_thread_cap = 0;  // 0 = uncapped
}

int effective_worker_count() {
  const int w = worker_count();
  return (t_thread_cap > 0) ? std::min(w, t_thread_cap) : w;
}

ThreadCapGuard::ThreadCapGuard(int cap) : previous_(t_thread_cap) { t_thread_cap = cap; }
ThreadCapGuard::~ThreadCapGuard() { t_thread_cap = previous_; }

void parallel_jobs(int jobs, int workers, const std::function<void(int)>& f) {
  if (jobs <= 0) return;
  workers = std::min(workers, jobs);
  if (workers <= 1) {
    for (int i = 0; i < jobs; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < jobs; i += workers) f(i);
    });
  for (int i = 0; i < jobs; i += workers) f(i);
  for (auto& t : pool) t.join();
}

}  // namespace nlslab
