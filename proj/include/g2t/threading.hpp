#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace g2t {

// Fixed-size worker pool with static chunking. parallel_for splits [begin, end)
// into one contiguous chunk per participant; chunk boundaries depend only on
// the range and the pool size, so work assignment is deterministic. Callers
// must make any cross-chunk reduction order-independent of scheduling (e.g.
// by storing per-index results and reducing sequentially afterwards).
class ThreadPool {
 public:
  explicit ThreadPool(int threads) : n_(threads < 1 ? 1 : threads) {
    for (int i = 1; i < n_; ++i)
      workers_.emplace_back([this, i] { worker_loop(i); });
  }

  ~ThreadPool() {
    {
      std::unique_lock lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  int size() const { return n_; }

  void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
    const int len = end - begin;
    if (len <= 0) return;
    if (n_ == 1 || len == 1) {
      for (int i = begin; i < end; ++i) fn(i);
      return;
    }
    {
      std::unique_lock lk(mu_);
      job_ = &fn;
      job_begin_ = begin;
      job_end_ = end;
      pending_ = n_ - 1;
      ++epoch_;
    }
    cv_.notify_all();
    run_chunk(0, begin, end, fn);
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  void run_chunk(int who, int begin, int end, const std::function<void(int)>& fn) {
    const long len = end - begin;
    const int lo = begin + static_cast<int>(len * who / n_);
    const int hi = begin + static_cast<int>(len * (who + 1) / n_);
    for (int i = lo; i < hi; ++i) fn(i);
  }

  void worker_loop(int who) {
    long seen = 0;
    for (;;) {
      const std::function<void(int)>* job;
      int b, e;
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return stop_ || epoch_ != seen; });
        if (stop_) return;
        seen = epoch_;
        job = job_;
        b = job_begin_;
        e = job_end_;
      }
      run_chunk(who, b, e, *job);
      {
        std::unique_lock lk(mu_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  int n_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(int)>* job_ = nullptr;
  int job_begin_ = 0, job_end_ = 0;
  int pending_ = 0;
  long epoch_ = 0;
  bool stop_ = false;
};

}  // namespace g2t
