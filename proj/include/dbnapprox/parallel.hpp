#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace dbnapprox {

// Process-wide worker count. The CLI sets it from --threads or
// DBNAPPROX_THREADS; the default of 1 keeps library calls serial.
int worker_count();
void set_worker_count(int n);

// Splits [0, total) into fixed-size chunks and calls fn(begin, end, chunk_index)
// for each. The chunk grid depends only on (total, chunk_size), never on the
// worker count, so callers that reduce per-chunk results in chunk order get
// identical output for any number of workers.
template <class Fn>
void for_chunks(std::size_t total, std::size_t chunk_size, Fn&& fn) {
  if (total == 0) return;
  const std::size_t chunks = (total + chunk_size - 1) / chunk_size;
  const int workers = worker_count();
  if (workers <= 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t b = c * chunk_size;
      fn(b, std::min(total, b + chunk_size), c);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::size_t b = c * chunk_size;
      fn(b, std::min(total, b + chunk_size), c);
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(workers), chunks);
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace dbnapprox
