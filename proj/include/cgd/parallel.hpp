// Minimal deterministic work-sharing: bodies write only to their own index's
// slot, so results do not depend on the thread count or schedule.

#pragma once

#include <functional>

namespace cgd {

/// 0 resolves to the hardware concurrency (at least 1).
int resolve_threads(int requested);

/// Runs body(0), ..., body(count-1) on up to `threads` workers. The first
/// exception thrown by any body is rethrown after all workers join.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace cgd
