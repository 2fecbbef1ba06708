#pragma once

#include <cstddef>
#include <functional>

namespace pccnmf {

/// Runs fn(0) .. fn(count - 1) on up to `threads` workers. Tasks must write
/// to disjoint outputs; the first exception thrown is rethrown after all
/// workers join. threads <= 1 runs inline, in index order.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace pccnmf
