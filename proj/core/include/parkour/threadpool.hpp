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

#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace parkour {

// Fixed-size worker pool for data-parallel loops. Work is partitioned by
// index range, workers write to disjoint slots, so results are bitwise
// independent of the thread count.
class ThreadPool {
 public:
  explicit ThreadPool(int n_threads = 0);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  /// Runs fn(i) for i in [0, n); blocks until all items are done.
  /// Exceptions from fn are rethrown on the calling thread (first one wins).
  void parallel_for(int n, const std::function<void(int)>& fn);

  /// Process-wide pool sized from hardware_concurrency.
  static ThreadPool& global();

 private:
  void worker_loop();

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_work_;
  std::condition_variable cv_done_;
  const std::function<void(int)>* job_ = nullptr;
  int job_size_ = 0;
  int next_index_ = 0;
  int in_flight_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace parkour
