#pragma once

#include <cstddef>
#include <functional>

namespace bohmwork {

/// Worker count used when a caller passes 0: the hardware concurrency, at least 1.
std::size_t default_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Bodies must write only to slots owned by their index. The first exception
/// thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace bohmwork
