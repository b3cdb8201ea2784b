#include "chda/parallel.hpp"

#include <atomic>

namespace chda {
namespace {
std::atomic<std::size_t> g_workers{0};
}

std::size_t worker_count() {
    const std::size_t n = g_workers.load();
    if (n > 0) return n;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

void set_worker_count(std::size_t n) { g_workers.store(n); }

}  // namespace chda
