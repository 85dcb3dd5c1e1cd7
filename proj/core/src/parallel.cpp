#include "relcomp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace relcomp {

void parallel_for(Index count, int threads, const std::function<void(Index)>& body) {
  if (count <= 0) return;
  const int workers = static_cast<int>(std::min<Index>(std::max(threads, 1), count));
  if (workers == 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<Index> next{0};
  std::exception_ptr first_error;
  Index first_error_index = count;
  std::mutex error_mutex;

  auto worker = [&] {
    for (Index i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        // Report the lowest-index failure so errors do not depend on scheduling.
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace relcomp
