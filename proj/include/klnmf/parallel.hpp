#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace klnmf::detail {

/// Runs f(i) for i in [0, n) on up to `threads` workers, each owning one
/// contiguous range. Every index is processed by exactly one worker and no
/// cross-worker reduction happens here, so results do not depend on the
/// worker count. The first exception thrown by any worker is rethrown.
template <typename F>
void parallel_for(Eigen::Index n, int threads, F&& f) {
  if (threads <= 1 || n < 2 * threads) {
    for (Eigen::Index i = 0; i < n; ++i) f(i);
    return;
  }
  const Eigen::Index chunk = (n + threads - 1) / threads;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<std::size_t>(threads));
    for (Eigen::Index begin = 0; begin < n; begin += chunk) {
      const Eigen::Index end = std::min(n, begin + chunk);
      workers.emplace_back([&, begin, end] {
        try {
          for (Eigen::Index i = begin; i < end; ++i) f(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace klnmf::detail
