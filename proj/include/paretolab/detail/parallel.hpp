#pragma once

#include <algorithm>
#include <future>
#include <thread>
#include <vector>

namespace paretolab {

template <class Fn>
auto run_indexed(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> out;
  out.reserve(n);
  const std::size_t width = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  for (std::size_t begin = 0; begin < n; begin += width) {
    const std::size_t end = std::min(n, begin + width);
    std::vector<std::future<Result>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async, fn, i));
    }
    // get() rethrows the first failure in index order.
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

}  // namespace paretolab
