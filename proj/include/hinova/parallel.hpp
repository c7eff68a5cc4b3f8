// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hinova {

/// Fixed-size worker pool. Work is partitioned into exactly size() contiguous
/// chunks, one per thread (chunk 0 runs on the caller). Numerical invariance
/// rule: bodies may only write to output slots owned by their own index range
/// and must perform reductions over a fixed iteration order inside a single
/// slot, so results are identical for every thread count, including 1.
class ThreadPool {
 public:
  explicit ThreadPool(int n_threads) {
    n_ = std::max(1, n_threads);
    if (n_ == 1) return;
    workers_.reserve(std::size_t(n_ - 1));
    for (int w = 1; w < n_; ++w) workers_.emplace_back([this, w] { worker_loop(w); });
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    if (n_ == 1) return;
    {
      std::unique_lock<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_start_.notify_all();
    for (auto& t : workers_) t.join();
  }

  int size() const { return n_; }

  /// Runs fn(chunk, lo, hi) for chunk in [0,size()) where [lo,hi) partitions
  /// [0,n) contiguously. chunk identifies per-thread scratch. Blocks until
  /// every chunk returns. Empty chunks are still invoked with lo == hi.
  void parallel_chunks(std::size_t n, const std::function<void(int, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (n_ == 1) {
      fn(0, 0, n);
      return;
    }
    {
      std::unique_lock<std::mutex> lk(mu_);
      job_ = &fn;
      job_n_ = n;
      pending_ = n_ - 1;
      ++epoch_;
    }
    cv_start_.notify_all();
    run_chunk(0, n, fn);
    std::unique_lock<std::mutex> lk(mu_);
    cv_done_.wait(lk, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

  /// Runs fn(i) for every i in [0,n), split across the pool.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    parallel_chunks(n, [&](int, std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }

 private:
  void run_chunk(int chunk, std::size_t n,
                 const std::function<void(int, std::size_t, std::size_t)>& fn) {
    const std::size_t per = (n + std::size_t(n_) - 1) / std::size_t(n_);
    const std::size_t lo = std::min(n, std::size_t(chunk) * per);
    const std::size_t hi = std::min(n, lo + per);
    fn(chunk, lo, hi);
  }

  void worker_loop(int chunk) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(int, std::size_t, std::size_t)>* job = nullptr;
      std::size_t n = 0;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_start_.wait(lk, [&] { return stop_ || epoch_ != seen; });
        if (stop_) return;
        seen = epoch_;
        job = job_;
        n = job_n_;
      }
      if (job) run_chunk(chunk, n, *job);
      {
        std::unique_lock<std::mutex> lk(mu_);
        if (--pending_ == 0) cv_done_.notify_all();
      }
    }
  }

  int n_ = 1;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_start_, cv_done_;
  const std::function<void(int, std::size_t, std::size_t)>* job_ = nullptr;
  std::size_t job_n_ = 0;
  int pending_ = 0;
  std::uint64_t epoch_ = 0;
  bool stop_ = false;
};

}  // namespace hinova
