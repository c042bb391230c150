// Built with -mavx2 -mfma; only reached through the dispatch table after a
// CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "mpemba/kernels.hpp"

namespace mpemba::kernels::detail {

namespace {

// (b) * (ar + i ai) for two interleaved complex numbers in b.
inline __m256d cmul_bcast(__m256d b, __m256d ar, __m256d ai) {
  const __m256d bs = _mm256_permute_pd(b, 0b0101);
  return _mm256_fmaddsub_pd(b, ar, _mm256_mul_pd(bs, ai));
}

inline __m128d cmul_bcast(__m128d b, __m128d ar, __m128d ai) {
  const __m128d bs = _mm_permute_pd(b, 0b01);
  return _mm_fmaddsub_pd(b, ar, _mm_mul_pd(bs, ai));
}

// Elementwise complex product a * b for interleaved pairs.
inline __m256d cmul(__m256d a, __m256d b) {
  const __m256d br = _mm256_movedup_pd(b);
  const __m256d bi = _mm256_permute_pd(b, 0b1111);
  const __m256d as = _mm256_permute_pd(a, 0b0101);
  return _mm256_fmaddsub_pd(a, br, _mm256_mul_pd(as, bi));
}

inline __m128d cmul(__m128d a, __m128d b) {
  const __m128d br = _mm_movedup_pd(b);
  const __m128d bi = _mm_permute_pd(b, 0b11);
  const __m128d as = _mm_permute_pd(a, 0b01);
  return _mm_fmaddsub_pd(a, br, _mm_mul_pd(as, bi));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void gemm_avx2(std::size_t m, std::size_t k, std::size_t n, const cplx* a, const cplx* b,
               cplx* c) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  double* pc = reinterpret_cast<double*>(c);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + 2 * i * n;
    const double* arow = pa + 2 * i * k;
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d ar = _mm256_broadcast_sd(arow + 2 * p);
        const __m256d ai = _mm256_broadcast_sd(arow + 2 * p + 1);
        const __m256d bv = _mm256_loadu_pd(pb + 2 * (p * n + j));
        acc = _mm256_add_pd(acc, cmul_bcast(bv, ar, ai));
      }
      _mm256_storeu_pd(crow + 2 * j, acc);
    }
    if (j < n) {
      __m128d acc = _mm_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m128d ar = _mm_set1_pd(arow[2 * p]);
        const __m128d ai = _mm_set1_pd(arow[2 * p + 1]);
        const __m128d bv = _mm_loadu_pd(pb + 2 * (p * n + j));
        acc = _mm_add_pd(acc, cmul_bcast(bv, ar, ai));
      }
      _mm_storeu_pd(crow + 2 * j, acc);
    }
  }
}

void axpy_avx2(std::size_t n, cplx alpha, const cplx* x, cplx* y) {
  const double* px = reinterpret_cast<const double*>(x);
  double* py = reinterpret_cast<double*>(y);
  const __m256d ar = _mm256_set1_pd(alpha.real());
  const __m256d ai = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(px + 2 * i);
    const __m256d yv = _mm256_loadu_pd(py + 2 * i);
    _mm256_storeu_pd(py + 2 * i, _mm256_add_pd(yv, cmul_bcast(xv, ar, ai)));
  }
  if (i < n) {
    const __m128d xv = _mm_loadu_pd(px + 2 * i);
    const __m128d yv = _mm_loadu_pd(py + 2 * i);
    const __m128d r =
        cmul_bcast(xv, _mm_set1_pd(alpha.real()), _mm_set1_pd(alpha.imag()));
    _mm_storeu_pd(py + 2 * i, _mm_add_pd(yv, r));
  }
}

cplx trace_product_avx2(std::size_t n, const cplx* a, const cplx* b) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  __m256d acc = _mm256_setzero_pd();
  __m128d tail = _mm_setzero_pd();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
      const __m256d av = _mm256_loadu_pd(pa + 2 * (i * n + j));
      // B is walked down column i.
      const __m256d bv = _mm256_set_m128d(_mm_loadu_pd(pb + 2 * ((j + 1) * n + i)),
                                          _mm_loadu_pd(pb + 2 * (j * n + i)));
      acc = _mm256_add_pd(acc, cmul(av, bv));
    }
    if (j < n) {
      const __m128d av = _mm_loadu_pd(pa + 2 * (i * n + j));
      const __m128d bv = _mm_loadu_pd(pb + 2 * (j * n + i));
      tail = _mm_add_pd(tail, cmul(av, bv));
    }
  }
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d s = _mm_add_pd(_mm_add_pd(lo, hi), tail);
  alignas(16) double out[2];
  _mm_store_pd(out, s);
  return {out[0], out[1]};
}

double norm_sq_avx2(std::size_t n, const cplx* x) {
  const double* px = reinterpret_cast<const double*>(x);
  const std::size_t len = 2 * n;
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d v = _mm256_loadu_pd(px + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double res = hsum(acc);
  for (; i < len; ++i) res += px[i] * px[i];
  return res;
}

double scaled_error_sq_avx2(std::size_t n, const cplx* err, const cplx* y0, const cplx* y1,
                            double atol, double rtol) {
  const double* pe = reinterpret_cast<const double*>(err);
  const double* p0 = reinterpret_cast<const double*>(y0);
  const double* p1 = reinterpret_cast<const double*>(y1);
  const std::size_t len = 2 * n;
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d va = _mm256_set1_pd(atol);
  const __m256d vr = _mm256_set1_pd(rtol);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d a0 = _mm256_andnot_pd(sign, _mm256_loadu_pd(p0 + i));
    const __m256d a1 = _mm256_andnot_pd(sign, _mm256_loadu_pd(p1 + i));
    const __m256d sc = _mm256_fmadd_pd(vr, _mm256_max_pd(a0, a1), va);
    const __m256d r = _mm256_div_pd(_mm256_loadu_pd(pe + i), sc);
    acc = _mm256_fmadd_pd(r, r, acc);
  }
  double res = hsum(acc);
  for (; i < len; ++i) {
    const double sc = atol + rtol * std::max(std::abs(p0[i]), std::abs(p1[i]));
    const double r = pe[i] / sc;
    res += r * r;
  }
  return res;
}

constexpr KernelTable kAvx2{
    "avx2", gemm_avx2, axpy_avx2, trace_product_avx2, norm_sq_avx2, scaled_error_sq_avx2,
};

}  // namespace

const KernelTable& avx2_impl() noexcept { return kAvx2; }

}  // namespace mpemba::kernels::detail
