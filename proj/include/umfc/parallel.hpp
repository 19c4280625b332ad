// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#ifndef UMFC_PARALLEL_HPP
#define UMFC_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace umfc {

// Runs body(begin, end) over contiguous shards of [0, n). Each index is owned
// by exactly one shard, so per-index outputs are identical to a serial run.
// Reductions across shards are the caller's job and must merge in shard order.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_shard = 1024) {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t shards = std::min(hw, std::max<std::size_t>(1, n / min_shard));
  if (shards <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t step = (n + shards - 1) / shards;
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t begin = s * step;
    const std::size_t end = std::min(n, begin + step);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace umfc

#endif  // UMFC_PARALLEL_HPP
