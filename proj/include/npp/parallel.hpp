#pragma once

#include <cstddef>
#include <functional>

namespace npp {

// Worker cap for parallel_for. Initialised from NPP_THREADS, default 1.
void set_thread_count(int threads);
int thread_count();

// Runs fn(i) for i in [0, count). Callers write results into slot i, so the
// outcome is independent of how indices are spread over threads. Nested calls
// run serially.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace npp
