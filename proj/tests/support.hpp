#pragma once

// Helpers shared by the unit tests and the acceptance run.

#include <cmath>
#include <random>

#include "mpemba/matcore.hpp"
#include "mpemba/qstate.hpp"

namespace mpemba::testing {

inline CMatrix random_matrix(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

inline CMatrix random_hermitian(std::size_t n, std::mt19937_64& rng) {
  return hermitian_part(random_matrix(n, rng));
}

// G G† / Tr: full rank with probability one.
inline DensityOperator random_state(std::size_t n, std::mt19937_64& rng) {
  const CMatrix g = random_matrix(n, rng);
  CMatrix rho = hermitian_part(g * g.adjoint());
  rho /= rho.trace();
  return DensityOperator(rho);
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// The determinant (Gram) form of the SEAQT dissipator for generators {I, H}
// on a full-rank state, expanded along the operator-valued first row:
//   D̃ = [√ρ lnρ·C₁₁ + √ρ·C₁₂ + √ρ H·C₁₃] / C₁₁,   D = ½(√ρ D̃ + (√ρ D̃)†),
// with (F, G) = ½ Tr(ρ{F, G}). Written independently of the library's
// covariance code.
inline CMatrix determinant_form_dissipator(const CMatrix& rho, const CMatrix& h) {
  const std::size_t d = rho.rows();
  const HermEig e = herm_eig(rho);
  std::vector<double> sq(d), lg(d);
  for (std::size_t i = 0; i < d; ++i) {
    sq[i] = std::sqrt(e.values[i]);
    lg[i] = std::log(e.values[i]);
  }
  const CMatrix sqrt_rho = reconstruct(e.vectors, sq);
  const CMatrix log_rho = reconstruct(e.vectors, lg);
  const CMatrix id = CMatrix::identity(d);
  auto inner = [&](const CMatrix& f, const CMatrix& g) {
    return 0.5 * (trace_product(rho, f * g) + trace_product(rho, g * f)).real();
  };
  const double ii = inner(id, id), ih = inner(id, h), hh = inner(h, h);
  const double il = inner(id, log_rho), hl = inner(h, log_rho);
  const double c11 = ii * hh - ih * ih;
  const double c12 = -(il * hh - ih * hl);
  const double c13 = il * ih - ii * hl;
  CMatrix dt = (c11 / c11) * (sqrt_rho * log_rho);
  dt.axpy(c12 / c11, sqrt_rho);
  dt.axpy(c13 / c11, sqrt_rho * h);
  const CMatrix x = sqrt_rho * dt;
  return 0.5 * (x + x.adjoint());
}

}  // namespace mpemba::testing
