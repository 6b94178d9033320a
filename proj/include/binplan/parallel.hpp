#pragma once

#include <cstddef>
#include <functional>

namespace binplan {

/// Worker count: BINPLAN_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) across workers. Each index runs exactly once;
/// callers write results to per-index slots so output never depends on the
/// schedule. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace binplan
