#include "thermalsplat/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace thermalsplat {
namespace {

int default_threads() {
  if (const char* env = std::getenv("THERMALSPLAT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<int>& thread_setting() {
  static std::atomic<int> n{default_threads()};
  return n;
}

}  // namespace

int thread_count() { return thread_setting().load(); }

void set_thread_count(int n) { thread_setting().store(std::max(1, n)); }

void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn) {
  if (end <= begin) return;
  const std::size_t n = end - begin;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }

  std::exception_ptr error;
  std::mutex error_mutex;
  auto run_chunk = [&](std::size_t w) {
    const std::size_t lo = begin + n * w / workers;
    const std::size_t hi = begin + n * (w + 1) / workers;
    try {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run_chunk, w);
  run_chunk(0);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace thermalsplat
