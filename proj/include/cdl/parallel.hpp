#pragma once

#include <functional>

#include "cdl/common.hpp"

namespace cdl {

int default_threads();  // hardware concurrency, at least 1

// Runs body(0..count-1) on up to `threads` workers. Work items must be
// independent; any scheduling may occur, so callers that need reproducible
// output derive every item's randomness from its index, never from thread
// identity. The first exception thrown by a worker is rethrown here.
void parallel_for(Index count, int threads,
                  const std::function<void(Index)>& body);

}  // namespace cdl
