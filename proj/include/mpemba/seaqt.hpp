#pragma once

// Steepest-entropy-ascent dynamics of an isolated system with generators
// {I, H}:
//
//   dρ/dt = −i[H, ρ] − (1/τ_D) · ½{βΔH − ΔS, ρ},   β = σ_HS / σ_HH,
//
// which is the (β/2){Δf, ρ} form with f = H − S/β written without 1/β so it
// stays finite as β → 0. Also: thermodynamic observables, relaxation-time
// models, Gibbs states and an adaptive integrator with invariant monitoring.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mpemba/matcore.hpp"
#include "mpemba/ode.hpp"
#include "mpemba/qstate.hpp"

namespace mpemba::seaqt {

struct RelaxationModel {
  enum class Kind { Constant, Logistic, FluctuationDiagnostic };
  Kind kind = Kind::Constant;
  double tau = 1.0;  // Constant
  double w3 = 0.0;   // Logistic: τ(t) = w3 / (1 + exp(−(w4 + w5 t)))
  double w4 = 0.0;
  double w5 = 0.0;

  static RelaxationModel constant(double tau);
  static RelaxationModel logistic(double w3, double w4, double w5);
  // τ = β²σ_FF / (d⟨S⟩/dt). Only usable as a diagnostic; it cannot drive
  // the integrator because it needs the rate it would produce.
  static RelaxationModel fluctuation_diagnostic();
};

// τ_D at time t for Constant/Logistic models. ZeroTau when |τ| ≤ 1e-12.
double tau_at(const RelaxationModel& model, double t);

// Full form: FluctuationDiagnostic evaluates β²σ_FF(ρ) / entropy_rate_estimate
// (ZeroEntropyRate when the estimate is 0); other kinds ignore ρ and the rate.
double tau_eval(const RelaxationModel& model, const DensityOperator& rho, const CMatrix& h,
                double t, double entropy_rate_estimate);

struct ThermoObservables {
  double energy = 0.0;
  double entropy = 0.0;
  double beta = std::numeric_limits<double>::quiet_NaN();
  bool beta_defined = false;
  double sigma_hh = 0.0;
  double sigma_hs = 0.0;
  double sigma_ss = 0.0;
  double sigma_ff = std::numeric_limits<double>::quiet_NaN();
  double sigma_fs = std::numeric_limits<double>::quiet_NaN();
  double heat_capacity = std::numeric_limits<double>::quiet_NaN();
  double phi_seaqt = std::numeric_limits<double>::quiet_NaN();  // σ_FF
  double free_energy = std::numeric_limits<double>::quiet_NaN();  // ⟨f⟩
  double entropy_rate = std::numeric_limits<double>::quiet_NaN(); // β²σ_FF/τ, needs τ
};

// σ_HH ≤ this leaves β undefined.
inline constexpr double kVarianceFloor = 1e-12;

// Never throws on a degenerate variance; β-dependent fields stay NaN and
// beta_defined is false. tau, when finite and nonzero, fills entropy_rate.
ThermoObservables observe(const DensityOperator& rho, const CMatrix& h,
                          double tau = std::numeric_limits<double>::quiet_NaN());

// As observe, but DegenerateVariance when β is undefined.
ThermoObservables observables(const DensityOperator& rho, const CMatrix& h,
                              double tau = std::numeric_limits<double>::quiet_NaN());

// D = ½{βΔH − ΔS, ρ}; DegenerateVariance when σ_HH ≤ kVarianceFloor.
CMatrix dissipation_operator(const DensityOperator& rho, const CMatrix& h);

struct SeaqtModel {
  CMatrix hamiltonian;
  RelaxationModel relaxation;
};

// Right-hand side on a raw Hermitian matrix. support_rank = 0 takes the
// support from the eigenvalues above kSupportCutoff; otherwise the largest
// support_rank eigenvalues form the support.
CMatrix eom_rhs(const CMatrix& rho, const CMatrix& h, double tau, std::size_t support_rank = 0);

CMatrix eom_rhs(const DensityOperator& rho, const SeaqtModel& model, double t);

struct GibbsState {
  double beta_eq = 0.0;
  double partition = 0.0;      // Z(β); may overflow to inf for extreme β
  double log_partition = 0.0;  // ln Z(β), always finite
  DensityOperator state = DensityOperator::unchecked(CMatrix());
};

GibbsState gibbs_state(const CMatrix& h, double beta);

// Solves Tr(H e^{−βH})/Z = energy. EnergyOutOfRange unless the energy lies
// strictly inside the spectrum of H.
GibbsState equilibrium_state(const CMatrix& h, double energy);

// ln Z(β) from the spectrum, using a shifted log-sum-exp. The long double
// overload is for finite-difference checks.
double log_partition(std::span<const double> energies, double beta);
long double log_partition_ld(std::span<const double> energies, long double beta);

struct IntegrateOptions {
  ode::AdaptiveOptions adaptive{};
  // Rank-deficient initial states are lifted to (1−η)ρ + ηI/d.
  double regularization = 1e-6;
  double support_cutoff = kSupportCutoff;
  // Eigenvalues below −clip_threshold are clipped to zero and counted.
  double clip_threshold = 1e-6;
  bool compute_observables = true;
};

struct Sample {
  double t = 0.0;
  DensityOperator state = DensityOperator::unchecked(CMatrix());
  ThermoObservables obs;
  double tau = 0.0;
};

struct TrajectoryDiagnostics {
  ode::StepStats steps;
  bool regularized = false;
  double eta = 0.0;
  double max_trace_drift = 0.0;
  double max_energy_drift = 0.0;
  double min_eigenvalue = 1.0;
  double worst_entropy_step = 0.0;  // most negative per-step ⟨S⟩ change with τ > 0
  std::size_t entropy_violations = 0;
  std::size_t positivity_clips = 0;
  std::size_t rank_changes = 0;
  std::size_t negative_tau_steps = 0;
  std::vector<std::string> warnings;

  // Counts samples/steps that broke the contract: trace ≤ 1e-9, energy ≤ 1e-6,
  // min eigenvalue ≥ −1e-8, entropy per step ≥ −1e-9.
  std::size_t invariant_violations() const;
};

struct Trajectory {
  std::vector<Sample> samples;
  TrajectoryDiagnostics diag;
};

// Samples at every requested time (ascending, ≥ 0, integration starts at 0).
Trajectory integrate(const SeaqtModel& model, const DensityOperator& rho_in,
                     std::span<const double> times, const IntegrateOptions& options = {});

}  // namespace mpemba::seaqt
