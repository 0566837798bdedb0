#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hv {

// Worker count: an explicit request wins, then the HECKE_VIRT_THREADS
// environment variable, then the hardware.
int resolve_thread_count(int requested);

// Evaluate fn(0..count-1) on up to nthreads workers.  Each slot receives the
// result for its own index, so the output is independent of scheduling; any
// exception is rethrown on the calling thread.
template <class R>
std::vector<R> parallel_map(long count, int nthreads, const std::function<R(long)>& fn) {
  std::vector<R> out(static_cast<size_t>(count));
  if (count == 0) return out;
  int workers = static_cast<int>(std::max<long>(1, std::min<long>(nthreads, count)));
  if (workers == 1) {
    for (long i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<long> next{0};
  std::exception_ptr fail;
  std::mutex fail_mu;
  auto run = [&] {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mu);
        if (!fail) fail = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (fail) std::rethrow_exception(fail);
  return out;
}

}  // namespace hv
