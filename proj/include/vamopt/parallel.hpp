#pragma once

#include <cstddef>
#include <functional>

namespace vamopt {

// Number of worker threads to use when the caller asks for `jobs` (0 = hardware).
int resolve_jobs(int jobs);

// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index is
// processed exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace vamopt
