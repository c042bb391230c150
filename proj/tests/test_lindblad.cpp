#include <doctest.h>

#include <algorithm>
#include <random>

#include "mpemba/lindblad.hpp"
#include "mpemba/states.hpp"
#include "support.hpp"

using namespace mpemba;
using namespace mpemba::lindblad;
using mpemba::testing::max_abs_diff;

namespace {

LindbladModel decay_qubit(double kappa) {
  LindbladModel m;
  m.hamiltonian = CMatrix(2, 2);
  m.jumps.push_back(CMatrix(2, 2, {0.0, std::sqrt(kappa), 0.0, 0.0}));
  return m;
}

}  // namespace

TEST_CASE("Liouvillian of the zero generator vanishes") {
  LindbladModel m;
  m.hamiltonian = CMatrix(3, 3);
  const CMatrix l = build_liouvillian(m);
  CHECK(l.rows() == 9);
  CHECK(l.frobenius_norm() == 0.0);
}

TEST_CASE("Liouvillian action matches the master equation") {
  const LindbladModel m = case_study_model();
  const CMatrix l = build_liouvillian(m);
  CHECK(l.rows() == 9);
  std::mt19937_64 rng(21);
  for (int k = 0; k < 25; ++k) {
    const CMatrix x = mpemba::testing::random_matrix(3, rng);  // not just states: linearity
    CHECK(max_abs_diff(unvec(l * vec(x), 3), master_rhs(m, x)) < 1e-13);
  }
  // Population of |1> feeds |0> at rate κ₁ through the jump term.
  const CMatrix d = master_rhs(m, CMatrix::diagonal({0.0, 1.0, 0.0}));
  CHECK(d(0, 0).real() == doctest::Approx(2.0));
  CHECK(d(1, 1).real() == doctest::Approx(-2.0));
}

TEST_CASE("decaying qubit spectrum") {
  const double kappa = 0.7;
  const LiouvillianSpectrum s = spectrum(decay_qubit(kappa));
  std::vector<double> re;
  for (const cplx& l : s.eigenvalues) {
    re.push_back(l.real());
    CHECK(std::abs(l.imag()) < 1e-12);
  }
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(-kappa));
  CHECK(re[1] == doctest::Approx(-kappa / 2));
  CHECK(re[2] == doctest::Approx(-kappa / 2));
  CHECK(std::abs(re[3]) < 1e-12);
}

TEST_CASE("case-study spectrum structure") {
  const LiouvillianSpectrum s = spectrum(case_study_model());
  REQUIRE(s.modes_valid);
  CHECK(std::abs(s.eigenvalues[0]) < 1e-10);
  CHECK(s.eigenvalues[1].real() < 0.0);
  CHECK(std::abs(s.eigenvalues[1].real()) < std::abs(s.eigenvalues[2].real()));
  CHECK(s.steady_state.trace().real() == doctest::Approx(1.0));
  CHECK(s.steady_state.is_hermitian(1e-12));
  CHECK(herm_eig(s.steady_state).values.front() > -1e-12);
  CHECK(max_abs_diff(master_rhs(case_study_model(), s.steady_state), CMatrix(3, 3)) < 1e-12);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) {
      const cplx ov = trace_product(s.left_modes[i], s.right_modes[j]);
      CHECK(std::abs(ov - (i == j ? 1.0 : 0.0)) < 1e-9);
    }
  // L̂₀ is the identity: trace preservation.
  CHECK(max_abs_diff(s.left_modes[0], CMatrix::identity(3)) < 1e-9);
}

TEST_CASE("propagate_modes edge cases") {
  const LiouvillianSpectrum s = spectrum(case_study_model());
  const std::vector<double> t = {0.0, 1.0, 10.0};
  for (const DensityOperator& r : propagate_modes(s, s.steady(), t))
    CHECK(hs_distance(r, s.steady()) < 1e-12);
  const auto far = propagate_modes(s, states::table1_state(states::Table1Row::Ket0),
                                    std::vector<double>{0.0, 2000.0});
  CHECK(hs_distance(far.back(), s.steady()) < 1e-6);
}

TEST_CASE("integrate_direct against the scalar decay law") {
  const double kappa = 0.9;
  const LindbladModel m = decay_qubit(kappa);
  const std::vector<double> t = {0.0, 0.5, 1.0, 3.0};
  const auto traj = integrate_direct(m, DensityOperator(CMatrix::diagonal({0.0, 1.0})), t);
  for (std::size_t k = 0; k < t.size(); ++k)
    CHECK(traj[k].matrix()(1, 1).real() == doctest::Approx(std::exp(-kappa * t[k])).epsilon(1e-10));
  // Zero generator: constant.
  LindbladModel z;
  z.hamiltonian = CMatrix(2, 2);
  const DensityOperator rho(CMatrix::diagonal({0.3, 0.7}));
  for (const auto& r : integrate_direct(z, rho, t)) CHECK(hs_distance(r, rho) == 0.0);
}

TEST_CASE("overlap with the slowest mode") {
  const LiouvillianSpectrum s = spectrum(case_study_model());
  CHECK(std::abs(mpemba_overlap(s, s.steady())) < 1e-10);
  // Linearity: admixing ε·R̂₁ (Hermitized) gives overlap ε·Tr(L̂₁ herm(R̂₁)).
  const CMatrix r1 = hermitian_part(s.right_modes[1]);
  const cplx unit = trace_product(s.left_modes[1], r1);
  for (double eps : {1e-4, 1e-3, 1e-2}) {
    CMatrix x = s.steady_state;
    x.axpy(eps, r1);
    CHECK(std::abs(mpemba_overlap(s, x) - eps * unit) < 1e-12);
  }
  CHECK(std::abs(unit) > 0.1);
}

TEST_CASE("Table I |0> state relaxes slowly, sME state quickly") {
  const LiouvillianSpectrum s = spectrum(case_study_model());
  const cplx phi0 = mpemba_overlap(s, states::table1_state(states::Table1Row::Ket0));
  const cplx phis = mpemba_overlap(s, states::table1_state(states::Table1Row::Sme));
  CHECK(std::abs(phi0) > 100 * std::abs(phis));
}
