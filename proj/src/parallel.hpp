#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace spcp::detail {

// Jobs are claimed by index, so results land in caller-owned slots and the
// output does not depend on the thread count.
template <typename Job>
void run_pool(int n_jobs, int threads, Job&& job) {
  const int workers = std::max(1, std::min(threads, n_jobs));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int j = next++; j < n_jobs; j = next++) job(j);
  };
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
}

}  // namespace spcp::detail
