#pragma once

#include <cstddef>
#include <functional>

namespace rotstar {

/// Worker count: ROTSTAR_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(k) for k in [0, n). Each index is handled by exactly one worker
/// and writes only its own outputs, so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rotstar
