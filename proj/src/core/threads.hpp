#pragma once

#include <cstddef>
#include <functional>

namespace amc {

// Static-partition fork/join helper. Work is split into fixed ranges that
// never overlap, so any kernel whose output elements are disjoint per range
// produces bit-identical results regardless of thread count or schedule.
class ThreadPool {
 public:
  static ThreadPool& instance();

  // Calls fn(begin, end) over a partition of [0, n). Ranges are contiguous,
  // cover [0, n) exactly once, and may run concurrently. `grain` is the
  // minimum range size worth dispatching to another thread.
  void parallel_for(std::size_t n, std::size_t grain,
                    const std::function<void(std::size_t, std::size_t)>& fn);

  int thread_count() const { return nthreads_; }

  ~ThreadPool();

 private:
  ThreadPool();
  struct Impl;
  Impl* impl_;
  int nthreads_;
};

inline void parallel_for(std::size_t n, std::size_t grain,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  ThreadPool::instance().parallel_for(n, grain, fn);
}

}  // namespace amc
