#pragma once

#include <cstddef>
#include <functional>

namespace uptime {

/// Process-wide cap on worker threads used inside a stage. 0 means
/// "hardware concurrency". Results never depend on this value: work is
/// split into fixed-size chunks and reductions combine chunk partials in
/// chunk order.
void set_thread_count(std::size_t threads);
std::size_t thread_count();

/// Calls `body(chunk_index)` for every chunk in [0, chunks), possibly
/// concurrently. Exceptions thrown by the body are rethrown (first one
/// by chunk index) after all workers join.
void parallel_for(std::size_t chunks,
                  const std::function<void(std::size_t)>& body);

}  // namespace uptime
