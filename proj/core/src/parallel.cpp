#include "specdict/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace specdict {

void parallel_for(long n, const std::function<void(long)>& fn) {
  if (n <= 0) return;

  unsigned hw = std::thread::hardware_concurrency();
  long workers = static_cast<long>(hw == 0 ? 1 : hw);
  if (workers > n) workers = n;

  if (workers <= 1 || n < 4) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto body = [&]() {
    constexpr long kChunk = 4;
    while (!failed.load(std::memory_order_relaxed)) {
      long begin = next.fetch_add(kChunk);
      if (begin >= n) return;
      long end = std::min(begin + kChunk, n);
      for (long i = begin; i < end; ++i) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers - 1));
  for (long t = 1; t < workers; ++t) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();

  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace specdict
