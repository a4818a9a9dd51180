#pragma once

// Fixed-size worker pool over an index range. Each task writes only to its
// own slot, so results do not depend on scheduling or worker count.

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace roughtfe::harness {

template <class F>
void parallel_for(std::size_t count, unsigned workers, F&& task) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

// Runs task(i) for every i and collects the results by index.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, unsigned workers, F&& task) {
  std::vector<R> out(count);
  parallel_for(count, workers, [&](std::size_t i) { out[i] = task(i); });
  return out;
}

}  // namespace roughtfe::harness
