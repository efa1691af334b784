#pragma once

#include <cstdint>
#include <functional>

namespace scl::par {

/// Worker cap from the SCL_THREADS environment variable (0 or unset = auto).
int thread_cap();

/// Apply the SCL_THREADS cap to the OpenMP runtime. Called once by the tools;
/// harmless without OpenMP.
void apply_thread_cap();

/// Number of threads a parallel_for will actually use.
int active_threads();

/// Data-parallel loop over [0, n). Each index must be an independent unit of
/// work (its own RNG stream, its own output slot); results are then identical
/// to parallel_for_serial regardless of scheduling.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

/// Serial reference loop, kept for testing against the OpenMP path.
void parallel_for_serial(std::int64_t n, const std::function<void(std::int64_t)>& body);

} // namespace scl::par
