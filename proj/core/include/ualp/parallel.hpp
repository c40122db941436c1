#pragma once

#include <cstddef>
#include <functional>

namespace ualp {

std::size_t default_worker_count() noexcept;

/// Runs fn(i) for i in [0, n) on up to `workers` threads. If any call throws,
/// the exception from the smallest failing index is rethrown after all
/// workers join, so failures are reported independently of scheduling.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace ualp
