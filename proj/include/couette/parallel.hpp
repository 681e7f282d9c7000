#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace couette {

// Serial is the reference path; every parallel kernel must reproduce it
// bit for bit, since results are written by index.
enum class Exec { serial, parallel };

void set_jobs(int jobs);
int jobs();

// An exception from any index is rethrown after the loop; with several
// failures the lowest index wins, as in the serial loop.
template <class F>
void for_each_index(Exec exec, std::size_t n, F&& body) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const long count = static_cast<long>(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace couette
