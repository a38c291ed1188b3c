#pragma once

#include <cstddef>
#include <functional>

namespace lesionbench {

// Worker cap: LESION_BENCH_THREADS when set (>= 1), otherwise the hardware
// concurrency, never more than n_tasks and never less than 1.
std::size_t worker_count(std::size_t n_tasks);

// Runs fn(0) ... fn(n-1) across workers. Work item i always means the same
// task, so writes into index-i slots make results independent of scheduling.
// If any items throw, the exception of the lowest index is rethrown after
// all workers join (deterministic error selection).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace lesionbench
