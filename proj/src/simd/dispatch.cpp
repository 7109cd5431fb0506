#include <atomic>
#include <cstdlib>
#include <string_view>

#include "aeos/simd/kernels.hpp"

namespace aeos::simd {

#if defined(AEOS_HAVE_AVX2_TABLE)
const KernelTable* avx2_kernels_compiled();
#endif

const KernelTable* avx2_kernels() {
#if defined(AEOS_HAVE_AVX2_TABLE) && (defined(__x86_64__) || defined(__i386__))
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? avx2_kernels_compiled() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* select_default() {
  const char* env = std::getenv("AEOS_SIMD");
  const std::string_view forced = env ? env : "";
  if (forced == "scalar") return &scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{select_default()};
  return slot;
}

}  // namespace

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

void set_active(const KernelTable& table) {
  active_slot().store(&table, std::memory_order_relaxed);
}

}  // namespace aeos::simd
