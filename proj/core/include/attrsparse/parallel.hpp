#pragma once

#include <cstddef>
#include <functional>

namespace attrsparse {

/// Worker count: hardware concurrency, capped by ATTRSPARSE_THREADS.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) across worker threads. Each index is
/// visited exactly once; callers write into pre-sized, index-addressed
/// output so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace attrsparse
