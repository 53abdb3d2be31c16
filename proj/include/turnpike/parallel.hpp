#pragma once

#include <functional>

namespace turnpike {

/// Worker count: hardware concurrency capped by the TURNPIKE_THREADS
/// environment variable (values < 1 mean serial).
int worker_thread_count();

/// Runs fn(i) for i in [0, count). Results must be written to disjoint,
/// preallocated slots; any reduction over them happens afterwards in index
/// order, so outputs do not depend on the thread count.
void parallel_for(int count, const std::function<void(int)>& fn);

} // namespace turnpike
