#pragma once

#include <cstddef>
#include <functional>

namespace tabrep {

// Worker cap: min(hardware_concurrency, TABREP_THREADS when set).
int worker_count();

// Runs fn(i) for i in [0, n). Work items must be independent; callers that
// reduce results do so afterwards in index order, which keeps every run
// bit-identical regardless of the thread count.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace tabrep
