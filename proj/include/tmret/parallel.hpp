#pragma once

#include <cstddef>
#include <functional>

namespace tmret {

/// Runs `fn(i)` for every i in [0, n) over `threads` workers (0 = hardware
/// concurrency). Indices are split into contiguous chunks; `fn` must only write
/// to slot i of its output.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace tmret
