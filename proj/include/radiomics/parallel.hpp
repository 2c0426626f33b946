#pragma once

#include <cstddef>
#include <functional>

namespace radiomics {

/// Worker cap: RADIOMICS_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
unsigned thread_budget();

/// Run body(i) for i in [0, n). Each index is handled exactly once; callers
/// write to disjoint slots so the result never depends on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace radiomics
