#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace pfrec {

// Runs body(thread_index, begin, end) over contiguous chunks of [0, n).
// With one thread everything happens on the calling thread, in order.
template <typename Body>
void parallel_rows(std::uint32_t n, unsigned threads, const Body& body) {
  if (threads <= 1 || n <= 1) {
    body(0u, 0u, n);
    return;
  }
  const unsigned used = std::min<unsigned>(threads, n);
  const std::uint32_t chunk = (n + used - 1) / used;
  std::vector<std::jthread> pool;
  pool.reserve(used);
  for (unsigned t = 0; t < used; ++t) {
    const std::uint32_t begin = t * chunk;
    const std::uint32_t end = std::min<std::uint32_t>(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, t, begin, end] { body(t, begin, end); });
  }
}

}  // namespace pfrec
