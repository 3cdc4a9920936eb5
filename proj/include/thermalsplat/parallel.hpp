#pragma once

#include <cstddef>
#include <functional>

namespace thermalsplat {

/// Worker count used by parallel_for. Defaults to THERMALSPLAT_THREADS when
/// set, otherwise std::thread::hardware_concurrency().
int thread_count();
void set_thread_count(int n);

/// Runs fn(i) for i in [begin, end). Work is split into contiguous chunks;
/// callers must not depend on execution order across indices.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace thermalsplat
