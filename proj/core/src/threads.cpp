#include "doetree/threads.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace doetree {

int effective_threads(int requested) {
    if (const char* env = std::getenv("DOETREE_THREADS")) {
        try {
            int cap = std::stoi(env);
            if (cap >= 1) return std::min(cap, 256);
        } catch (...) {
            // unparsable value: ignore
        }
    }
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    return std::max(n, 1);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    int workers = std::max(1, threads);
    if (workers == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) /
                              static_cast<std::size_t>(workers);
    for (int t = 0; t < workers; ++t) {
        std::size_t begin = static_cast<std::size_t>(t) * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace doetree
