// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace purikit {

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> n{0};  // 0: not set
  return n;
}
}  // namespace detail

/// Caps the worker pool used by the library. n = 0 restores the default
/// (PURIKIT_THREADS, else hardware concurrency).
inline void set_thread_count(int n) { detail::thread_setting() = std::max(n, 0); }

inline int thread_count() {
  if (int n = detail::thread_setting(); n > 0) return n;
  if (const char* env = std::getenv("PURIKIT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Items per work chunk. Chunk boundaries never depend on the thread count,
/// so per-chunk partial results are identical for any pool size.
inline constexpr std::size_t kChunk = 256;

/// Runs fn(begin, end, chunk_index) over fixed-size chunks of [0, n).
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const auto workers = static_cast<std::size_t>(
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), chunks));
  auto run = [&](std::size_t c) { fn(c * kChunk, std::min(n, (c + 1) * kChunk), c); };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t c; (c = next.fetch_add(1)) < chunks;) {
          try {
            run(c);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            next = chunks;
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

/// fn(i) for every i in [0, n).
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  parallel_chunks(n, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

/// Runs independent tasks 0..n-1 with one task per worker slot (used for
/// whole chains).
template <typename Fn>
void parallel_tasks(std::size_t n, Fn&& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            next = n;
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

/// Pairwise tree sum over a fixed ordering.
template <typename T>
T pairwise_sum(const std::vector<T>& v, T zero) {
  if (v.empty()) return zero;
  std::vector<T> level = v;
  while (level.size() > 1) {
    std::vector<T> up;
    up.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) up.push_back(level[i] + level[i + 1]);
    if (level.size() % 2) up.push_back(level.back());
    level.swap(up);
  }
  return level.front();
}

/// Deterministic map-reduce: per-chunk sequential sums of fn(i), then a
/// pairwise tree over chunks. Same bits for any thread count.
template <typename T, typename Fn>
T parallel_sum(std::size_t n, T zero, Fn&& fn) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<T> partial(chunks, zero);
  parallel_chunks(n, [&](std::size_t b, std::size_t e, std::size_t c) {
    T acc = zero;
    for (std::size_t i = b; i < e; ++i) acc = acc + fn(i);
    partial[c] = acc;
  });
  return pairwise_sum(partial, zero);
}

}  // namespace purikit
