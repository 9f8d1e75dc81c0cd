#pragma once

#include <cstddef>
#include <functional>

namespace ctlab {

/// Worker count used by data-parallel cell loops. Defaults to 1.
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [begin, end). Each index is visited exactly once, so
/// results written per index do not depend on the worker count.
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end,
                  const std::function<void(std::ptrdiff_t)>& body);

}  // namespace ctlab
