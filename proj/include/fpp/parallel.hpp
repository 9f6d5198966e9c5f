#pragma once

#include <omp.h>

#include <cstddef>
#include <exception>
#include <vector>

namespace fpp {

/// Worker count for `jobs` (<= 0 means every logical core).
inline int resolve_jobs(int jobs) { return jobs > 0 ? jobs : omp_get_num_procs(); }

/// Serial reference: results[i] = fn(i) in index order.
template <class R, class Fn>
std::vector<R> run_tasks_serial(std::size_t n, Fn&& fn) {
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
  return out;
}

/// OpenMP worker pool over independent tasks. Each task writes only its own
/// slot, so the result is identical to run_tasks_serial for any job count.
/// The exception of the lowest failing index is rethrown.
template <class R, class Fn>
std::vector<R> run_tasks(std::size_t n, int jobs, Fn&& fn) {
  const int workers = resolve_jobs(jobs);
  if (workers == 1 || n <= 1) return run_tasks_serial<R>(n, fn);
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace fpp
