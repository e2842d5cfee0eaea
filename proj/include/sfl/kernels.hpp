#pragma once
// Dense double-precision inner-loop kernels with runtime-dispatched
// scalar / AVX2 variants. Elementwise kernels (axpy, scale) are
// bit-identical across variants; reductions (dot, sq_dist) may differ
// in association and are equivalence-tested to tolerance.

#include <cstddef>

namespace sfl::kernels {

struct Ops {
  const char* name;
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x[i] *= a
  void (*scale)(double a, double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum (x[i] - y[i])^2
  double (*sq_dist)(const double* x, const double* y, std::size_t n);
};

const Ops& scalar();

#if defined(__x86_64__)
bool avx2_supported();
const Ops& avx2();
#endif

// Best supported variant; SFL_KERNELS=scalar|avx2 env var overrides.
const Ops& active();

}  // namespace sfl::kernels
