#include "mbaccel/parallel.hpp"

#include "mbaccel/errors.hpp"

namespace mbaccel {

WorkerPool::WorkerPool(std::size_t workers) {
  if (workers == 0) throw ValidationError("WorkerPool: need at least one worker");
  threads_.reserve(workers - 1);
  for (std::size_t k = 1; k < workers; ++k) threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::drain() {
  std::size_t done_here = 0;
  for (;;) {
    const std::size_t k = next_.fetch_add(1);
    if (k >= count_) break;
    try {
      (*task_)(k);
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
    ++done_here;
  }
  std::lock_guard lock(mutex_);
  finished_ += done_here;
  if (finished_ == count_) done_.notify_all();
}

void WorkerPool::worker_loop() {
  std::size_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      // Joined too late: the caller has already collected this job.
      if (task_ == nullptr || finished_ == count_) continue;
      ++active_;
    }
    drain();
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    done_.notify_all();
  }
}

void WorkerPool::parallel_for(std::size_t count, const std::function<void(std::size_t)>& task) {
  if (count == 0) return;
  if (threads_.empty() || count == 1) {
    for (std::size_t k = 0; k < count; ++k) task(k);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    task_ = &task;
    count_ = count;
    next_.store(0);
    finished_ = 0;
    error_ = nullptr;
    ++generation_;
  }
  wake_.notify_all();
  drain();
  std::exception_ptr error;
  {
    std::unique_lock lock(mutex_);
    // Workers still inside drain() hold a pointer to `task`; wait them out.
    done_.wait(lock, [&] { return finished_ == count_ && active_ == 0; });
    task_ = nullptr;
    error = error_;
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace mbaccel
