#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qdecay {

// Evaluates fn(i) for i in [0, n) on up to `threads` workers and returns the
// results in index order. Each index is computed exactly once, so the output
// does not depend on the worker count or scheduling.
template <class Fn>
auto parallel_map(std::uint64_t n, unsigned threads, Fn&& fn)
    -> std::vector<decltype(fn(std::uint64_t{}))> {
    using Result = decltype(fn(std::uint64_t{}));
    std::vector<Result> out(n);
    const unsigned workers =
        static_cast<unsigned>(std::clamp<std::uint64_t>(threads == 0 ? 1 : threads, 1, std::max<std::uint64_t>(n, 1)));
    if (workers == 1) {
        for (std::uint64_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }

    constexpr std::uint64_t kChunk = 64;
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        try {
            for (;;) {
                const std::uint64_t begin = next.fetch_add(kChunk);
                if (begin >= n) return;
                const std::uint64_t end = std::min(n, begin + kChunk);
                for (std::uint64_t i = begin; i < end; ++i) out[i] = fn(i);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(n);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

} // namespace qdecay
