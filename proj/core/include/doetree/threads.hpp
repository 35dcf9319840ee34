// Worker-count resolution and a deterministic parallel-for helper.
//
// DOETREE_THREADS fixes the worker count. Work items write to disjoint,
// pre-indexed slots, so results never depend on scheduling.
#pragma once

#include <cstddef>
#include <functional>

namespace doetree {

// Resolve the worker count: the DOETREE_THREADS environment value when set,
// otherwise `requested` if positive, otherwise the hardware concurrency.
int effective_threads(int requested = 0);

// Run fn(i) for i in [0, n) across `threads` workers (static block partition).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace doetree
