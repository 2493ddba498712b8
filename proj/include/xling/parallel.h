// SPDX-License-Identifier: Apache-2.0
/**
 * @file   parallel.h
 * @brief  Static-partition parallel loop. Each index is visited exactly once;
 *         callers write into per-index slots and reduce in index order, so
 *         results do not depend on the job count.
 */
#ifndef XLING_PARALLEL_H_
#define XLING_PARALLEL_H_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace xling {

template <typename Fn>
void ParallelFor(std::size_t n, std::size_t jobs, Fn &&fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t j = 0; j < jobs; ++j) {
    workers.emplace_back([&, j] {
      try {
        for (std::size_t i = j; i < n; i += jobs) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto &w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace xling

#endif  // XLING_PARALLEL_H_
