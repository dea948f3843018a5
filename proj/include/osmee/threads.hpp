#pragma once

namespace osmee {

// Execution policy for the data-parallel kernels. `serial` runs the plain
// reference loop; `parallel` uses OpenMP. Both produce bitwise-identical
// results; the serial path exists for testing and as a baseline in the
// kernel benchmark.
enum class Exec { serial, parallel };

// Apply the OSMEE_THREADS environment cap (if set and positive) to the
// OpenMP runtime. Call once at program start.
void apply_thread_cap();

// Threads the parallel policy will actually use.
int thread_count();

} // namespace osmee
