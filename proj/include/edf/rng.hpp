#ifndef EDF_RNG_HPP
#define EDF_RNG_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace edf {

// splitmix64 finalizer; used to derive independent substream seeds so that
// serial and parallel execution see identical random streams.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    return mix_seed(mix_seed(master) ^ mix_seed(counter + 1));
}

using Rng = std::mt19937_64;

// Runs fn(i) for i in [0, count). Results must be written to preallocated
// per-index slots so the thread count never affects the output.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t n_workers = std::min<std::size_t>(threads, count);
    std::atomic<std::size_t> next{0};
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace edf

#endif
