#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mbaccel {

/// Fixed-size pool used for the per-iteration mini-batch map-reduce.
/// The calling thread takes part in every parallel_for, so a pool of
/// size 1 owns no threads and runs everything inline.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers = 1);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const noexcept { return threads_.size() + 1; }

  /// Runs task(k) for every k in [0, count) and blocks until all finish.
  /// The first exception thrown by a task is rethrown here.
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

 private:
  void worker_loop();
  void drain();

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  std::size_t count_ = 0;
  std::atomic<std::size_t> next_{0};
  std::size_t finished_ = 0;
  std::size_t generation_ = 0;
  std::size_t active_ = 0;
  std::exception_ptr error_;
  bool stop_ = false;
};

}  // namespace mbaccel
