#pragma once

namespace ugvnet::parallel {

// Caps the number of OpenMP threads used by the library's parallel kernels
// (solver stage assembly, sweep drivers). 0 restores the runtime default.
// No effect in builds without OpenMP.
void set_num_threads(int n);

// Threads the parallel kernels will actually use (1 without OpenMP).
int num_threads();

bool openmp_enabled();

}  // namespace ugvnet::parallel
