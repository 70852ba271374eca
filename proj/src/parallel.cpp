#include "ood/parallel.hpp"

#include <atomic>

namespace ood {
namespace {
std::atomic<unsigned> g_thread_count{0};
}

void set_thread_count(unsigned count) { g_thread_count.store(count); }

unsigned thread_count() {
  const unsigned configured = g_thread_count.load();
  if (configured != 0) return configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace ood
