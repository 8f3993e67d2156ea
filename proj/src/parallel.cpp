#include "lplace/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lplace {
namespace {

int initial_threads() {
  if (const char* env = std::getenv("LPLACE_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int>& thread_setting() {
  static std::atomic<int> value{initial_threads()};
  return value;
}

}  // namespace

int default_threads() { return thread_setting().load(); }

void set_default_threads(int threads) { thread_setting().store(threads > 0 ? threads : initial_threads()); }

int chunk_count(std::size_t n, int threads) {
  if (threads <= 0) threads = default_threads();
  if (n == 0) return 0;
  return static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(threads)));
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t, int)>& fn) {
  const int chunks = chunk_count(n, threads);
  if (chunks == 0) return;
  if (chunks == 1) {
    fn(0, n, 0);
    return;
  }
  const std::size_t base = n / chunks;
  const std::size_t extra = n % chunks;
  auto bounds = [&](int c) {
    const std::size_t uc = static_cast<std::size_t>(c);
    const std::size_t begin = uc * base + std::min(uc, extra);
    return std::pair{begin, begin + base + (uc < extra ? 1 : 0)};
  };

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(chunks - 1);
  auto run = [&](int c) {
    try {
      auto [b, e] = bounds(c);
      fn(b, e, c);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  for (int c = 1; c < chunks; ++c) workers.emplace_back(run, c);
  run(0);
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lplace
