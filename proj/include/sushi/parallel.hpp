#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sushi {

/// Process-wide worker count used by the estimators (default 1).
void set_worker_threads(int n);
int worker_threads();

/// Runs body(i) for i in [0, n) on contiguous chunks. Callers write results
/// into per-index slots and reduce afterwards in index order, which keeps
/// every reduction independent of the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(worker_threads()), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  // The failure with the lowest index wins, independent of scheduling.
  std::exception_ptr failure;
  std::size_t failed_at = n;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    std::size_t begin = n * t / threads;
    std::size_t end = n * (t + 1) / threads;
    pool.emplace_back([&, begin, end] {
      std::size_t current = begin;
      try {
        for (; current < end; ++current) body(current);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (current < failed_at) {
          failed_at = current;
          failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sushi
