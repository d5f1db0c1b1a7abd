#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace nspod {

/// Runs fn(chunk_index, begin, end, worker) over fixed-size chunks of
/// [0, count). The chunk partition depends only on count and chunk_size,
/// never on the worker count, so reductions that combine per-chunk partials
/// in chunk order are reproducible for any number of threads.
inline void parallel_chunks(std::size_t count, std::size_t chunk_size, int threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t, int)>& fn) {
    if (count == 0) return;
    const std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;
    auto run_chunk = [&](std::size_t ci, int worker) {
        const std::size_t begin = ci * chunk_size;
        const std::size_t end = std::min(begin + chunk_size, count);
        fn(ci, begin, end, worker);
    };
    const int workers = int(std::min<std::size_t>(std::max(threads, 1), n_chunks));
    if (workers <= 1) {
        for (std::size_t ci = 0; ci < n_chunks; ++ci) run_chunk(ci, 0);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            std::size_t ci;
            while ((ci = next.fetch_add(1)) < n_chunks) run_chunk(ci, w);
        });
    }
    for (auto& th : pool) th.join();
}

inline constexpr std::size_t kGradChunkSize = 512;

}  // namespace nspod
