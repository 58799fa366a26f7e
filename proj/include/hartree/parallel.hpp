#pragma once

#include <cstddef>
#include <cstdint>

namespace hartree {

// Parallel-map capability handed to modules. Static partitioning only, so a
// given thread count always produces the same work split; reductions are done
// by callers in index order.
class Executor {
 public:
  explicit Executor(int threads = 1);
  int threads() const { return threads_; }

  template <class F>
  void for_each(std::size_t n, F&& f) const {
    const auto count = static_cast<std::int64_t>(n);
    if (threads_ <= 1 || count < 2) {
      for (std::int64_t i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
      return;
    }
#pragma omp parallel for num_threads(threads_) schedule(static)
    for (std::int64_t i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
  }

  static const Executor& serial();

 private:
  int threads_;
};

int default_thread_count();

}  // namespace hartree
