#include <atomic>
#include <cstdlib>
#include <string_view>

#include "mlsent/simd/kernels.hpp"

namespace mlsent::simd {

#if defined(MLSENT_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif
#if defined(MLSENT_HAVE_NEON)
const KernelTable& neon_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(MLSENT_HAVE_AVX2)
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(MLSENT_HAVE_NEON)
  // NEON (with double-precision FMA) is mandatory on aarch64.
  return &neon_kernel_table();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* select_default() {
  const char* forced = std::getenv("MLSENT_KERNELS");
  const std::string_view want = forced ? forced : "";
  if (want == "scalar") return &scalar_kernels();
  if (want == "avx2" && avx2_kernels()) return avx2_kernels();
  if (want == "neon" && neon_kernels()) return neon_kernels();
  if (const KernelTable* t = avx2_kernels()) return t;
  if (const KernelTable* t = neon_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{select_default()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

const KernelTable& set_active(const KernelTable& table) {
  return *slot().exchange(&table, std::memory_order_acq_rel);
}

}  // namespace mlsent::simd
