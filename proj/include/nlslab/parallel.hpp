#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace nlslab {

/// Worker count used by threaded kernels and parallel experiment sweeps.
/// Defaults to 2; override with the NLSLAB_WORKERS environment variable.
/// A fixed default keeps floating-point summation orders, and therefore all
/// emitted files, reproducible between runs.
int worker_count();

/// Run f(i) for i in [0, jobs) on `workers` threads (including the caller).
void parallel_jobs(int jobs, int workers, const std::function<void(int)>& f);

/// Worker count after the per-thread cap set by an enclosing parallel section.
int effective_worker_count();

/// Caps nested kernel threading on the current thread for its lifetime.
struct ThreadCapGuard {
  explicit ThreadCapGuard(int cap);
  ~ThreadCapGuard();

 private:
  int previous_;
};

}  // namespace nlslab
