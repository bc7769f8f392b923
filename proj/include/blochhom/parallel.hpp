#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace blochhom {

/// Selects the serial reference kernel or its OpenMP counterpart.
enum class Exec { serial, parallel };

/// Number of OpenMP threads used by parallel kernels (1 without OpenMP).
int thread_count();
void set_thread_count(int n);

/// Runs fn(i) for i in [0, n). Under Exec::parallel the iterations are spread
/// over OpenMP threads; an exception from any iteration is rethrown after the
/// loop (the one from the lowest index, so failures are reproducible).
template <class Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace blochhom
