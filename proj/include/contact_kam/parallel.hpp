#pragma once

#include <cstddef>
#include <functional>

namespace contact_kam {

/// Hardware concurrency, capped by the CONTACT_KAM_THREADS environment variable when set.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index runs exactly once;
/// callers write results by index, so output does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace contact_kam
