#pragma once

#include <functional>

namespace specdict {

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks over up
// to hardware_concurrency() threads; each index writes only its own outputs,
// so results are identical to the serial loop. The first exception thrown by
// any chunk is rethrown on the calling thread.
void parallel_for(long n, const std::function<void(long)>& fn);

}  // namespace specdict
