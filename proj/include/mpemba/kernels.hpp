#pragma once

// Dense complex inner loops used by CMatrix and the integrators.
//
// Every kernel has a scalar reference implementation and, where the build
// and the CPU allow it, an AVX2+FMA variant. The variant is picked once at
// first use; MPEMBA_SIMD=scalar|avx2|auto overrides the choice. Complex
// values are stored interleaved (re, im) exactly as std::complex<double>.

#include <complex>
#include <cstddef>
#include <string_view>

namespace mpemba::kernels {

using cplx = std::complex<double>;

struct KernelTable {
  const char* name;

  // C (m x n) = A (m x k) * B (k x n), all row-major, C must not alias A or B.
  void (*gemm)(std::size_t m, std::size_t k, std::size_t n, const cplx* a, const cplx* b,
               cplx* c);

  // y += alpha * x over n complex entries.
  void (*axpy)(std::size_t n, cplx alpha, const cplx* x, cplx* y);

  // Tr(A * B) for square n x n row-major matrices.
  cplx (*trace_product)(std::size_t n, const cplx* a, const cplx* b);

  // Sum of |x_i|^2.
  double (*norm_sq)(std::size_t n, const cplx* x);

  // Sum over real components of (e / (atol + rtol * max(|y0|, |y1|)))^2.
  double (*scaled_error_sq)(std::size_t n, const cplx* err, const cplx* y0, const cplx* y1,
                            double atol, double rtol);
};

const KernelTable& scalar_table() noexcept;

// nullptr when AVX2 was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table() noexcept;

const KernelTable& active() noexcept;

// "scalar", "avx2" or "auto". Returns false if the request cannot be honoured
// (the active table is left unchanged in that case).
bool select(std::string_view which) noexcept;

}  // namespace mpemba::kernels
