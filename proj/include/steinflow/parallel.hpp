#pragma once

#include <cstddef>
#include <functional>

namespace steinflow {

/// Worker count honoring the STEINFLOW_THREADS cap (defaults to hardware
/// concurrency, never less than 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count). Each index is processed by exactly one
/// worker, so results written per index are independent of the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace steinflow
