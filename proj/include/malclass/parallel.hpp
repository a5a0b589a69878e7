#pragma once

#include <cstddef>
#include <functional>

namespace malclass {

/// 0 means "use hardware concurrency".
void set_thread_count(std::size_t threads);
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Each index must write only to its own output slot;
/// the first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace malclass
