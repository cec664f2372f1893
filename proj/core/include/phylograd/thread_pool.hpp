#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace phylograd {

// Fixed pool of workers that cooperatively drain an index range. The
// calling thread joins in as worker 0, so a pool of size 1 spawns nothing.
// Tasks are claimed from a shared atomic cursor; which worker runs which
// task is unspecified.
class ThreadPool {
 public:
  explicit ThreadPool(int workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  // Runs task(index, worker) for every index in [0, count); blocks until done.
  // Not reentrant. The first exception thrown by a task is rethrown here.
  void run(std::size_t count, const std::function<void(std::size_t, int)>& task);

 private:
  void worker_loop(int worker);
  void drain(int worker);

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t, int)>* task_ = nullptr;
  std::size_t count_ = 0;
  std::atomic<std::size_t> cursor_{0};
  std::size_t generation_ = 0;
  int active_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace phylograd
