#pragma once

// Density operators and the state functionals built on them: entropy
// operator, ρ-weighted inner products and covariances, populations and the
// Hilbert–Schmidt distance. Units are dimensionless with k_B = ħ = 1.

#include <vector>

#include "mpemba/matcore.hpp"

namespace mpemba {

class DensityOperator {
 public:
  // Validates: Hermitian within 1e-9, unit trace within 1e-9, smallest
  // eigenvalue ≥ −1e-9. Throws InvalidState otherwise.
  explicit DensityOperator(CMatrix m);

  // For states produced by trusted numerical paths (integrator samples);
  // skips validation.
  static DensityOperator unchecked(CMatrix m);

  const CMatrix& matrix() const noexcept { return m_; }
  std::size_t dim() const noexcept { return m_.rows(); }

 private:
  struct Unchecked {};
  DensityOperator(CMatrix m, Unchecked) : m_(std::move(m)) {}
  CMatrix m_;
};

struct PureStateSpec {
  std::vector<cplx> amplitudes;
};

struct EntropyContext {
  CMatrix support_projector;    // B̂
  CMatrix log_rho_on_support;   // B̂ ln ρ̂
  CMatrix entropy_operator;     // Ŝ = −B̂ ln ρ̂
  double entropy = 0.0;         // ⟨Ŝ⟩
  std::size_t rank = 0;
};

// |ψ⟩⟨ψ| with ψ renormalized to unit norm.
DensityOperator from_pure(const PureStateSpec& spec);

// (1 − η) ρ + η I/d
DensityOperator regularize(const DensityOperator& rho, double eta);

EntropyContext entropy_context(const DensityOperator& rho, double cutoff = kSupportCutoff);

// Ŝ = −ln(ρ̂ + P_ker): the kernel-shift form of the entropy operator.
CMatrix entropy_operator_shifted(const DensityOperator& rho, double cutoff = kSupportCutoff);

// √(ρ†ρ); equals ρ for valid states.
CMatrix abs_operator(const CMatrix& rho);

// ⟨F⟩ = Re Tr(ρ F)
double expectation(const DensityOperator& rho, const CMatrix& f);

// (F, G) = ½ Tr(ρ {F, G}). |ρ| is taken as ρ itself (valid states are PSD).
double weighted_inner(const DensityOperator& rho, const CMatrix& f, const CMatrix& g);

// (F, G) − ⟨F⟩⟨G⟩
double covariance(const DensityOperator& rho, const CMatrix& f, const CMatrix& g);

std::vector<double> populations(const DensityOperator& rho);

double hs_distance(const DensityOperator& a, const DensityOperator& b);

}  // namespace mpemba
