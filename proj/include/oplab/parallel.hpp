#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace oplab {

// Runs fn over items on up to `jobs` threads; results keep the input order.
template <class T, class Fn>
auto parallel_map(const std::vector<T>& items, Fn fn, int jobs) {
  using R = decltype(fn(items.front()));
  const std::size_t workers = std::min<std::size_t>(items.size(), static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    std::vector<R> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(fn(item));
    return out;
  }
  std::vector<std::optional<R>> slots(items.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(items.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < items.size(); i = next++) {
        try {
          slots[i].emplace(fn(items[i]));
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(items.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace oplab
