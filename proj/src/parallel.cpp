#include "sushi/parallel.hpp"

#include <atomic>
#include <stdexcept>

namespace sushi {

namespace {
std::atomic<int> g_threads{1};
}

void set_worker_threads(int n) {
  if (n < 1) throw std::invalid_argument("worker thread count must be >= 1");
  g_threads.store(n);
}

int worker_threads() { return g_threads.load(); }

}  // namespace sushi
