#include "hartree/parallel.hpp"

#include <algorithm>
#include <thread>

namespace hartree {

Executor::Executor(int threads) : threads_(std::max(1, threads)) {}

const Executor& Executor::serial() {
  static const Executor e(1);
  return e;
}

int default_thread_count() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace hartree
