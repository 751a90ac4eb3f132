#ifndef SPAD_BASE_PARALLEL_H_
#define SPAD_BASE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace spad {

// Runs fn(i) once for every i in [0, n) on up to `jobs` threads (jobs <= 1
// runs inline). Callers write results by index, so output does not depend
// on scheduling. The first exception is rethrown after all threads join.
void ParallelFor(size_t n, int jobs, const std::function<void(size_t)> &fn);

}  // namespace spad

#endif  // SPAD_BASE_PARALLEL_H_
