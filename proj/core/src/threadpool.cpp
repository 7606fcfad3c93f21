/*
Copyright 2026 the parkourlab authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "parkour/threadpool.hpp"

#include <algorithm>

namespace parkour {

ThreadPool::ThreadPool(int n_threads) {
  if (n_threads <= 0) {
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, n_threads);
  }
  for (int i = 0; i < n_threads - 1; ++i) {
    threads_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop() {
  uint64_t seen = 0;
  for (;;) {
    std::unique_lock<std::mutex> lk(mu_);
    cv_work_.wait(lk, [&] { return stop_ || (job_ && generation_ != seen); });
    if (stop_) return;
    seen = generation_;
    while (next_index_ < job_size_) {
      const int i = next_index_++;
      ++in_flight_;
      lk.unlock();
      try {
        (*job_)(i);
      } catch (...) {
        lk.lock();
        if (!error_) error_ = std::current_exception();
        --in_flight_;
        continue;
      }
      lk.lock();
      --in_flight_;
    }
    if (in_flight_ == 0) cv_done_.notify_all();
  }
}

void ThreadPool::parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (threads_.empty() || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::unique_lock<std::mutex> lk(mu_);
  job_ = &fn;
  job_size_ = n;
  next_index_ = 0;
  error_ = nullptr;
  ++generation_;
  cv_work_.notify_all();
  // the calling thread participates
  while (next_index_ < job_size_) {
    const int i = next_index_++;
    ++in_flight_;
    lk.unlock();
    try {
      fn(i);
    } catch (...) {
      lk.lock();
      if (!error_) error_ = std::current_exception();
      --in_flight_;
      continue;
    }
    lk.lock();
    --in_flight_;
  }
  cv_done_.wait(lk, [&] { return in_flight_ == 0; });
  job_ = nullptr;
  if (error_) std::rethrow_exception(error_);
}

ThreadPool& ThreadPool::global() {
  static ThreadPool pool;
  return pool;
}

}  // namespace parkour
