#include "core/threads.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace amc {

struct ThreadPool::Impl {
  std::mutex mu;
  std::condition_variable work_cv;
  std::condition_variable done_cv;
  const std::function<void(std::size_t, std::size_t)>* fn = nullptr;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t next = 0;
  std::size_t pending = 0;
  std::uint64_t generation = 0;
  bool stop = false;
  std::vector<std::thread> workers;

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      std::unique_lock<std::mutex> lock(mu);
      work_cv.wait(lock, [&] { return stop || generation != seen; });
      if (stop) return;
      seen = generation;
      for (;;) {
        if (next >= ranges.size()) break;
        auto r = ranges[next++];
        lock.unlock();
        (*fn)(r.first, r.second);
        lock.lock();
        if (--pending == 0) done_cv.notify_all();
      }
    }
  }
};

ThreadPool::ThreadPool() : impl_(new Impl) {
  unsigned n = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("AMC_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  if (n < 1) n = 1;
  nthreads_ = static_cast<int>(n);
  for (unsigned i = 1; i < n; ++i) {
    impl_->workers.emplace_back([this] { impl_->worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->stop = true;
  }
  impl_->work_cv.notify_all();
  for (auto& w : impl_->workers) w.join();
  delete impl_;
}

ThreadPool& ThreadPool::instance() {
  static ThreadPool pool;
  return pool;
}

void ThreadPool::parallel_for(std::size_t n, std::size_t grain,
                              const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (grain < 1) grain = 1;
  const std::size_t threads = static_cast<std::size_t>(nthreads_);
  std::size_t chunks = (n + grain - 1) / grain;
  if (chunks > threads * 4) chunks = threads * 4;
  if (threads == 1 || chunks <= 1) {
    fn(0, n);
    return;
  }

  // The pool runs one job at a time; nested or concurrent calls execute
  // inline. Results are identical either way since ranges are disjoint.
  static std::atomic<bool> busy{false};
  bool expected = false;
  if (!busy.compare_exchange_strong(expected, true)) {
    fn(0, n);
    return;
  }
  struct Release {
    std::atomic<bool>& flag;
    ~Release() { flag.store(false); }
  } release{busy};

  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(chunks);
  const std::size_t base = n / chunks, rem = n % chunks;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    std::size_t len = base + (c < rem ? 1 : 0);
    ranges.emplace_back(begin, begin + len);
    begin += len;
  }

  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->fn = &fn;
    impl_->ranges = std::move(ranges);
    impl_->next = 0;
    impl_->pending = impl_->ranges.size();
    ++impl_->generation;
  }
  impl_->work_cv.notify_all();

  // The calling thread drains chunks too.
  for (;;) {
    std::unique_lock<std::mutex> lock(impl_->mu);
    if (impl_->next >= impl_->ranges.size()) break;
    auto r = impl_->ranges[impl_->next++];
    lock.unlock();
    fn(r.first, r.second);
    lock.lock();
    if (--impl_->pending == 0) impl_->done_cv.notify_all();
  }
  std::unique_lock<std::mutex> lock(impl_->mu);
  impl_->done_cv.wait(lock, [&] { return impl_->pending == 0; });
}

}  // namespace amc
