#pragma once

#include <functional>

#include "relcomp/types.hpp"

namespace relcomp {

// Runs body(i) for i in [0, count) on up to `threads` workers. Work items
// must write only to their own slot; callers reduce the slots in index
// order afterwards, which keeps results independent of the thread count.
void parallel_for(Index count, int threads, const std::function<void(Index)>& body);

}  // namespace relcomp
