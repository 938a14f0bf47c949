#pragma once

#include <cstddef>
#include <functional>

namespace sic {

/// Worker count: hardware concurrency, capped by the SIC_THREADS
/// environment variable when set.
std::size_t worker_count();

/// Runs body(begin, end) over disjoint chunks of [0, n). Each index is
/// visited exactly once; callers write only to per-index outputs so the
/// result does not depend on the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace sic
