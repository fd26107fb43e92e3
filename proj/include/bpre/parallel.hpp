#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace bpre {

/// Evaluates fn(i) for i in [0, count) on `workers` threads and returns the
/// results in index order, so any later reduction is independent of the
/// thread count.
template <class T, class Fn>
std::vector<T> parallel_map(std::uint64_t count, unsigned workers, Fn&& fn) {
  std::vector<T> out(count);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::uint64_t>(count, 1))));
  if (workers == 1) {
    for (std::uint64_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::uint64_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        const std::uint64_t begin = w * chunk;
        const std::uint64_t end = std::min(count, begin + chunk);
        for (std::uint64_t i = begin; i < end; ++i) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace bpre
