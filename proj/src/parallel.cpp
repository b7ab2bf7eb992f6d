#include "fairegm/parallel.hpp"

#include <thread>

namespace fairegm {

namespace detail {
std::atomic<int> g_threads{0};
}

namespace {
int hardware_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : int(hc);
}
}  // namespace

void set_num_threads(int n) {
  detail::g_threads.store(n >= 1 ? n : hardware_threads());
}

int num_threads() {
  int t = detail::g_threads.load();
  if (t == 0) {
    t = hardware_threads();
    detail::g_threads.store(t);
  }
  return t;
}

}  // namespace fairegm
