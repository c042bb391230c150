#include "mpemba/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

namespace mpemba::kernels {

#if defined(MPEMBA_HAVE_AVX2)
namespace detail {
const KernelTable& avx2_impl() noexcept;
}
#endif

namespace {

void gemm_scalar(std::size_t m, std::size_t k, std::size_t n, const cplx* a, const cplx* b,
                 cplx* c) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  double* pc = reinterpret_cast<double*>(c);
  std::fill(pc, pc + 2 * m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + 2 * i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double ar = pa[2 * (i * k + p)];
      const double ai = pa[2 * (i * k + p) + 1];
      const double* brow = pb + 2 * p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double br = brow[2 * j];
        const double bi = brow[2 * j + 1];
        crow[2 * j] += ar * br - ai * bi;
        crow[2 * j + 1] += ar * bi + ai * br;
      }
    }
  }
}

void axpy_scalar(std::size_t n, cplx alpha, const cplx* x, cplx* y) {
  const double ar = alpha.real();
  const double ai = alpha.imag();
  const double* px = reinterpret_cast<const double*>(x);
  double* py = reinterpret_cast<double*>(y);
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = px[2 * i];
    const double xi = px[2 * i + 1];
    py[2 * i] += ar * xr - ai * xi;
    py[2 * i + 1] += ar * xi + ai * xr;
  }
}

cplx trace_product_scalar(std::size_t n, const cplx* a, const cplx* b) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  double re = 0.0;
  double im = 0.0;
  // sum_ij A_ij B_ji
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ar = pa[2 * (i * n + j)];
      const double ai = pa[2 * (i * n + j) + 1];
      const double br = pb[2 * (j * n + i)];
      const double bi = pb[2 * (j * n + i) + 1];
      re += ar * br - ai * bi;
      im += ar * bi + ai * br;
    }
  }
  return {re, im};
}

double norm_sq_scalar(std::size_t n, const cplx* x) {
  const double* px = reinterpret_cast<const double*>(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < 2 * n; ++i) acc += px[i] * px[i];
  return acc;
}

double scaled_error_sq_scalar(std::size_t n, const cplx* err, const cplx* y0, const cplx* y1,
                              double atol, double rtol) {
  const double* pe = reinterpret_cast<const double*>(err);
  const double* p0 = reinterpret_cast<const double*>(y0);
  const double* p1 = reinterpret_cast<const double*>(y1);
  double acc = 0.0;
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const double sc = atol + rtol * std::max(std::abs(p0[i]), std::abs(p1[i]));
    const double r = pe[i] / sc;
    acc += r * r;
  }
  return acc;
}

constexpr KernelTable kScalar{
    "scalar", gemm_scalar, axpy_scalar, trace_product_scalar, norm_sq_scalar,
    scaled_error_sq_scalar,
};

bool cpu_has_avx2() noexcept {
#if defined(MPEMBA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() noexcept {
  const char* env = std::getenv("MPEMBA_SIMD");
  if (env != nullptr && std::string(env) == "scalar") return &kScalar;
  if (const KernelTable* t = avx2_table()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(MPEMBA_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &detail::avx2_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_relaxed); }

bool select(std::string_view which) noexcept {
  if (which == "scalar") {
    current().store(&kScalar);
    return true;
  }
  if (which == "avx2") {
    const KernelTable* t = avx2_table();
    if (t == nullptr) return false;
    current().store(t);
    return true;
  }
  if (which == "auto") {
    const KernelTable* t = avx2_table();
    current().store(t != nullptr ? t : &kScalar);
    return true;
  }
  return false;
}

}  // namespace mpemba::kernels
