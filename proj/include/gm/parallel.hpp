#pragma once

#include <functional>

namespace gm {

// Worker count from the GM_THREADS environment variable, else the hardware
// concurrency, else 1. Values < 1 in the variable are ignored.
int default_thread_count();

// Applies body(i) for i in [begin, end) across `threads` workers (0 = default).
// Iterations must be independent; each writes only to its own output slot, so
// results never depend on the schedule. The first exception thrown by any
// iteration is rethrown on the calling thread after all workers finish.
void parallel_for(int begin, int end, const std::function<void(int)>& body,
                  int threads = 0);

}  // namespace gm
