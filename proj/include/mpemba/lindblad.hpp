#pragma once

// GKSL dynamics of the three-level case study: Liouvillian assembly in the
// column-stacking convention, biorthogonal eigenmodes, eigenmode propagation,
// a direct RK4 integrator used as the cross-check, and the overlap with the
// slowest decaying mode.

#include <span>
#include <vector>

#include "mpemba/matcore.hpp"
#include "mpemba/qstate.hpp"

namespace mpemba::lindblad {

struct LindbladModel {
  CMatrix hamiltonian;
  std::vector<CMatrix> jumps;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
};

// Dimensionless case-study rates. κ₂ is not printed anywhere and is derived
// from Ω_2P² ≈ 0.0015 Ω₁γ with κ ≈ Ω_P²/γ.
struct CaseStudyRates {
  double omega1 = 1.0;
  double omega2 = 0.06;
  double kappa1 = 2.0;
  double kappa2 = 0.0015;
};

// H = ½(Ω₁(|0⟩⟨1| + h.c.) + Ω₂(|0⟩⟨2| + h.c.)), J₁ = √κ₁|0⟩⟨1|, J₂ = √κ₂|0⟩⟨2|.
LindbladModel case_study_model(const CaseStudyRates& rates = {});

// −i[H, ρ] + Σ J ρ J† − ½{J†J, ρ}, evaluated directly on the matrix.
CMatrix master_rhs(const LindbladModel& model, const CMatrix& rho);

// 𝓛 with vec(dρ/dt) = 𝓛 vec(ρ) under column stacking:
// −i(I⊗H − Hᵀ⊗I) + Σ [J*⊗J − ½ I⊗J†J − ½ (J†J)ᵀ⊗I].
CMatrix build_liouvillian(const LindbladModel& model);

struct LiouvillianSpectrum {
  std::size_t dim = 0;
  CMatrix matrix;
  std::vector<cplx> eigenvalues;     // descending by real part
  std::vector<CMatrix> right_modes;  // R̂_i
  std::vector<CMatrix> left_modes;   // L̂_i, Tr(L̂_i R̂_j) = δ_ij
  CMatrix steady_state;              // R̂₀ scaled to unit trace, Hermitized
  bool modes_valid = false;          // false for degenerate/defective spectra
  double pairing_condition = 1.0;

  DensityOperator steady() const { return DensityOperator::unchecked(steady_state); }
};

LiouvillianSpectrum spectrum(const LindbladModel& model);

// ρ(t) = Σ_i Tr(L̂_i ρ_in) e^{λ_i t} R̂_i. Throws DegeneratePairing when the
// mode expansion is not usable.
std::vector<DensityOperator> propagate_modes(const LiouvillianSpectrum& spec,
                                             const DensityOperator& rho_in,
                                             std::span<const double> times);

// Fixed-step classical RK4 on the master equation. Each sample interval is
// split into equal steps no longer than max_step.
std::vector<DensityOperator> integrate_direct(const LindbladModel& model,
                                              const DensityOperator& rho_in,
                                              std::span<const double> times,
                                              double max_step = 1e-3);

// Φ_GKSL = Tr(L̂₁ ρ_in)
cplx mpemba_overlap(const LiouvillianSpectrum& spec, const DensityOperator& rho_in);

// Φ_GKSL evaluated on a raw Hermitian matrix (used inside searches).
cplx mpemba_overlap(const LiouvillianSpectrum& spec, const CMatrix& rho);

}  // namespace mpemba::lindblad
