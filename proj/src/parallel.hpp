// OpenMP loop helper that carries exceptions out of the parallel region.
#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace csifb::detail {

/// Runs body(i) for i in [0, n) in parallel. If any iteration throws, the
/// exception of the lowest failing index is rethrown after the loop, which
/// matches what a serial loop would have reported first.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace csifb::detail
