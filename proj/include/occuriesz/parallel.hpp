#pragma once

#include <cstddef>
#include <functional>

namespace occuriesz {

// OCCURIESZ_WORKERS when set to a positive integer, else the hardware concurrency (at least 1).
int default_workers();

// Resolves a requested worker count: values <= 0 mean default_workers().
int resolve_workers(int requested);

// Calls body(i) for every i in [0, n) from up to `workers` threads. Indices are handed out
// dynamically; results must be written to per-index slots. The exception thrown for the
// lowest index is rethrown after all threads finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace occuriesz
