#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace ecc {

// Applies `fn` to every element of `items`, possibly on several threads.
// Results land at the same index as their input, so the output order is
// independent of scheduling. threads <= 1 runs inline. If workers throw, the
// exception from the lowest-numbered worker is rethrown after all join.
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& items, Fn fn, unsigned threads)
    -> std::vector<decltype(fn(items[0]))> {
  using Out = decltype(fn(items[0]));
  std::vector<Out> results(items.size());
  if (items.empty()) return results;
  if (threads <= 1 || items.size() == 1) {
    for (std::size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i]);
    return results;
  }
  const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(items.size()));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = w; i < items.size(); i += workers) results[i] = fn(items[i]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& error : errors)
    if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace ecc
