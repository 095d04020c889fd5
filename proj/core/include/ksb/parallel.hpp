#pragma once

#include <functional>

namespace ksb {

/// Number of workers: KSB_WORKERS if set, else hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [0, n) on the worker pool. Each index writes only its
/// own output slot, so results are deterministic regardless of scheduling.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace ksb
