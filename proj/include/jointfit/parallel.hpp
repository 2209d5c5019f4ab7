#ifndef JOINTFIT_PARALLEL_HPP
#define JOINTFIT_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace jointfit {

// Process-wide worker cap. 0 means "decide from hardware"; the CLI sets this
// from --threads / JOINTFIT_THREADS.
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; results
// must be written to preallocated per-index slots so that the outcome does
// not depend on the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace jointfit

#endif
