#pragma once

#include <cstddef>
#include <functional>

namespace resilience {

/// Worker count from RESILIENCE_WORKERS, else the hardware concurrency.
int DefaultWorkers();

/// Calls fn(i) for every i in [0, count) on up to `workers` threads. Each index
/// runs exactly once; the first exception thrown is rethrown after all
/// workers stop.
void ParallelFor(std::size_t count, int workers,
                 const std::function<void(std::size_t)>& fn);

}  // namespace resilience
