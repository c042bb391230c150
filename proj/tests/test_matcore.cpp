#include <doctest.h>

#include <algorithm>
#include <random>

#include "mpemba/kernels.hpp"
#include "mpemba/matcore.hpp"
#include "support.hpp"

using namespace mpemba;
using mpemba::testing::max_abs_diff;
using mpemba::testing::random_hermitian;
using mpemba::testing::random_matrix;

TEST_CASE("vec identity vec(AXB) = (B^T kron A) vec(X)") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const CMatrix a = random_matrix(3, rng), x = random_matrix(3, rng), b = random_matrix(3, rng);
    const CMatrix lhs = vec(a * x * b);
    const CMatrix rhs = kron(b.transpose(), a) * vec(x);
    CHECK(max_abs_diff(lhs, rhs) < 1e-12);
    CHECK(max_abs_diff(unvec(vec(x), 3), x) == 0.0);
  }
}

TEST_CASE("vec stacks columns") {
  const CMatrix m(2, 2, {1.0, 2.0, 3.0, 4.0});
  const CMatrix v = vec(m);
  CHECK(v(0, 0) == cplx(1.0));
  CHECK(v(1, 0) == cplx(3.0));
  CHECK(v(2, 0) == cplx(2.0));
  CHECK(v(3, 0) == cplx(4.0));
}

TEST_CASE("herm_eig reconstructs and orders eigenvalues") {
  std::mt19937_64 rng(2);
  for (std::size_t n : {1u, 2u, 3u, 4u, 9u}) {
    const CMatrix h = random_hermitian(n, rng);
    const HermEig e = herm_eig(h);
    CHECK(std::is_sorted(e.values.begin(), e.values.end()));
    CHECK(max_abs_diff(reconstruct(e.vectors, e.values), h) < 1e-12);
    CHECK(max_abs_diff(e.vectors.adjoint() * e.vectors, CMatrix::identity(n)) < 1e-12);
  }
}

TEST_CASE("herm_eig rejects non-Hermitian input") {
  const CMatrix m(2, 2, {0.0, 1.0, 0.0, 0.0});
  CHECK_THROWS_AS(herm_eig(m), Error);
}

TEST_CASE("gen_eig matches companion-matrix roots") {
  // Companion matrix of (z-1)(z+2)(z-3i)(z+0.5): roots known in closed form.
  const cplx r[4] = {1.0, -2.0, {0.0, 3.0}, -0.5};
  cplx c[5] = {1.0, 0.0, 0.0, 0.0, 0.0};  // monic coefficients, highest first
  for (const cplx& root : r)
    for (int k = 4; k >= 1; --k) c[k] -= root * c[k - 1];
  CMatrix comp(4, 4);
  for (int j = 0; j < 4; ++j) comp(0, j) = -c[j + 1];
  for (int i = 1; i < 4; ++i) comp(i, i - 1) = 1.0;
  const GenEig g = gen_eig(comp);
  REQUIRE(g.values.size() == 4);
  for (const cplx& root : r) {
    double best = 1e300;
    for (const cplx& v : g.values) best = std::min(best, std::abs(v - root));
    CHECK(best < 1e-10);
  }
  for (std::size_t k = 1; k < 4; ++k) CHECK(g.values[k - 1].real() >= g.values[k].real());
  CHECK(g.biorthonormal);
  CHECK(max_abs_diff(g.left.adjoint() * g.right, CMatrix::identity(4)) < 1e-10);
}

TEST_CASE("func_on_support leaves the kernel at zero") {
  const CMatrix p = CMatrix::diagonal({0.25, 0.75, 0.0});
  const CMatrix l = func_on_support(p, [](double x) { return std::log(x); });
  CHECK(l(0, 0).real() == doctest::Approx(std::log(0.25)));
  CHECK(l(1, 1).real() == doctest::Approx(std::log(0.75)));
  CHECK(std::abs(l(2, 2)) < 1e-15);
  CHECK_THROWS_AS(psd_eig(CMatrix::diagonal({1.0, -0.1})), Error);
}

TEST_CASE("commutator and anticommutator") {
  std::mt19937_64 rng(3);
  const CMatrix a = random_matrix(3, rng), b = random_matrix(3, rng);
  CHECK(max_abs_diff(comm(a, b), a * b - b * a) < 1e-14);
  CHECK(max_abs_diff(acomm(a, b), a * b + b * a) < 1e-14);
  CHECK(std::abs(trace_product(a, b) - (a * b).trace()) < 1e-13);
}

TEST_CASE("kernel variants agree with the scalar reference") {
  const kernels::KernelTable* simd = kernels::avx2_table();
  if (!simd) {
    MESSAGE("AVX2 kernels unavailable on this build or CPU");
    return;
  }
  const kernels::KernelTable& ref = kernels::scalar_table();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  auto fill = [&](std::vector<cplx>& v) {
    for (auto& z : v) z = {g(rng), g(rng)};
  };
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 9u, 17u}) {
    std::vector<cplx> a(n * n), b(n * n), c1(n * n), c2(n * n);
    fill(a);
    fill(b);
    ref.gemm(n, n, n, a.data(), b.data(), c1.data());
    simd->gemm(n, n, n, a.data(), b.data(), c2.data());
    for (std::size_t i = 0; i < n * n; ++i) CHECK(std::abs(c1[i] - c2[i]) < 1e-12);

    // Rectangular shapes too.
    std::vector<cplx> r(n * 3), s(3 * (n + 1)), o1(n * (n + 1)), o2(n * (n + 1));
    fill(r);
    fill(s);
    ref.gemm(n, 3, n + 1, r.data(), s.data(), o1.data());
    simd->gemm(n, 3, n + 1, r.data(), s.data(), o2.data());
    for (std::size_t i = 0; i < o1.size(); ++i) CHECK(std::abs(o1[i] - o2[i]) < 1e-12);

    std::vector<cplx> y1 = b, y2 = b;
    ref.axpy(n * n, {0.3, -1.2}, a.data(), y1.data());
    simd->axpy(n * n, {0.3, -1.2}, a.data(), y2.data());
    for (std::size_t i = 0; i < n * n; ++i) CHECK(std::abs(y1[i] - y2[i]) < 1e-14);

    CHECK(std::abs(ref.trace_product(n, a.data(), b.data()) -
                   simd->trace_product(n, a.data(), b.data())) < 1e-12);
    CHECK(ref.norm_sq(n * n, a.data()) == doctest::Approx(simd->norm_sq(n * n, a.data())).epsilon(1e-14));
    CHECK(ref.scaled_error_sq(n * n, a.data(), b.data(), y1.data(), 1e-10, 1e-8) ==
          doctest::Approx(simd->scaled_error_sq(n * n, a.data(), b.data(), y1.data(), 1e-10, 1e-8))
              .epsilon(1e-13));
  }
}

TEST_CASE("kernel selection honours requests") {
  const std::string before = kernels::active().name;
  CHECK(kernels::select("scalar"));
  CHECK(std::string(kernels::active().name) == "scalar");
  CHECK_FALSE(kernels::select("neon9"));
  CHECK(std::string(kernels::active().name) == "scalar");
  CHECK(kernels::select("auto"));
  const kernels::KernelTable* best = kernels::avx2_table();
  CHECK(&kernels::active() == (best ? best : &kernels::scalar_table()));
  CHECK(kernels::select(before));
}
