#pragma once

// Dense double-precision kernels used by the encoder and the surrogate fit.
//
// Every kernel has a scalar reference implementation. Vector variants (AVX2+FMA
// on x86-64, NEON on aarch64) are selected once at startup from CPU features and
// can be forced with MLSENT_KERNELS=scalar|avx2|neon. Variants agree with the
// scalar path up to floating-point reassociation; they are not bit-identical.

#include <cstddef>
#include <span>
#include <string_view>

namespace mlsent::simd {

// All matrices are row-major, dense, `rows x cols`.
struct KernelTable {
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x  (y has `rows` entries)
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += A^T x  (x has `rows` entries, y has `cols`)
  void (*gemv_t_acc)(const double* a, std::size_t rows, std::size_t cols, const double* x,
                     double* y);
  // A += alpha * x y^T
  void (*ger)(double alpha, const double* x, std::size_t rows, const double* y, std::size_t cols,
              double* a);
};

const KernelTable& scalar_kernels();
// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// The table chosen at startup.
const KernelTable& active();
// Override the active table (tests, benchmarking). Returns the previous table.
const KernelTable& set_active(const KernelTable& table);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace mlsent::simd
