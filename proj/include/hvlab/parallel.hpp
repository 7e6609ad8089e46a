#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace hvlab {

// Runs fn(block_index, begin, end) over fixed-size blocks of [0, n).
// Blocks are claimed dynamically but indexed, so callers that reduce the
// per-block results in block order get answers independent of the worker
// count. Block size is a constant, never derived from `threads`.
inline void for_blocks(std::uint64_t n, std::uint64_t block_size, int threads,
                       const std::function<void(std::size_t, std::uint64_t,
                                                std::uint64_t)>& fn) {
    if (n == 0) return;
    const std::uint64_t n_blocks = (n + block_size - 1) / block_size;
    if (threads <= 1 || n_blocks == 1) {
        for (std::uint64_t b = 0; b < n_blocks; ++b)
            fn(static_cast<std::size_t>(b), b * block_size,
               std::min(n, (b + 1) * block_size));
        return;
    }
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::uint64_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            fn(static_cast<std::size_t>(b), b * block_size,
               std::min(n, (b + 1) * block_size));
        }
    };
    std::vector<std::thread> pool;
    int n_workers = std::min<std::uint64_t>(threads, n_blocks);
    pool.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

inline constexpr std::uint64_t kTrialBlock = 1 << 16;

} // namespace hvlab
