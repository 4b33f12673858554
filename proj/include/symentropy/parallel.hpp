#pragma once

// Seeded random streams and deterministic chunked Monte Carlo reduction.
//
// Every Monte Carlo loop in the library is cut into fixed-size chunks. Chunk c
// draws from its own generator seeded with split_seed(seed, c), and chunk
// results are merged in chunk order. The output therefore depends only on
// (seed, count), never on how many worker threads ran the chunks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace symentropy {

using Rng = std::mt19937_64;

inline constexpr std::size_t kChunkSize = 4096;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream i of a base seed: seed XOR hash(i).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed ^ splitmix64(stream);
}

// Welford accumulator with the pairwise (Chan et al.) merge.
class RunningStats {
 public:
  void push(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const RunningStats& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double delta = other.mean_ - mean_;
    const double total = na + nb;
    mean_ += delta * nb / total;
    m2_ += other.m2_ + delta * delta * na * nb / total;
    n_ += other.n_;
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double stddev() const { return std::sqrt(variance()); }
  double stderr_of_mean() const {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Worker cap: SYMENTROPY_THREADS if set to a positive integer, otherwise the
// hardware concurrency.
inline std::size_t worker_count() {
  std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SYMENTROPY_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return hw;
}

struct ChunkRange {
  std::size_t index;
  std::size_t begin;
  std::size_t end;
  std::size_t size() const { return end - begin; }
};

// Runs fn(range, rng) for every chunk of [0, count) and returns the per-chunk
// results in chunk order. fn must be safe to call concurrently.
template <class Fn>
auto run_chunks(std::size_t count, std::uint64_t seed, Fn&& fn)
    -> std::vector<decltype(fn(std::declval<ChunkRange>(), std::declval<Rng&>()))> {
  using Result = decltype(fn(std::declval<ChunkRange>(), std::declval<Rng&>()));
  const std::size_t chunks = (count + kChunkSize - 1) / kChunkSize;
  std::vector<Result> results(chunks);

  auto do_chunk = [&](std::size_t c) {
    ChunkRange range{c, c * kChunkSize, std::min(count, (c + 1) * kChunkSize)};
    Rng rng(split_seed(seed, c));
    results[c] = fn(range, rng);
  };

  const std::size_t workers = std::min(worker_count(), chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) do_chunk(c);
    return results;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += workers) {
        try {
          do_chunk(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

// Convenience: chunks return a RunningStats each; merged in order.
template <class Fn>
RunningStats reduce_chunks(std::size_t count, std::uint64_t seed, Fn&& fn) {
  RunningStats total;
  for (const auto& part : run_chunks(count, seed, std::forward<Fn>(fn))) {
    total.merge(part);
  }
  return total;
}

}  // namespace symentropy
