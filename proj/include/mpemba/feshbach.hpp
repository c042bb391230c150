#pragma once

// Four-level Hamiltonian with the short-lived |P⟩ level and its Feshbach
// projection onto span{|0⟩, |1⟩, |2⟩}. ε = H_P − E is a free parameter; it is
// not iterated self-consistently.

#include <utility>

#include "mpemba/matcore.hpp"

namespace mpemba::feshbach {

struct FourLevelParams {
  double omega1 = 1.0;
  double omega2 = 0.06;
  double omega1P = 0.0;
  double omega2P = 0.0;
  double detuning = 0.0;
  double gamma = 1.0;
  double epsilon = 1.0;
};

struct EffectiveParams {
  double w1 = 0.0;
  double w2 = 0.0;
};

// ½ [[0, Ω₁, Ω₂, 0], [Ω₁, 0, 0, Ω_1P], [Ω₂, 0, 0, Ω_2P], [0, Ω_1P, Ω_2P, Δ]]
CMatrix full_hamiltonian(const FourLevelParams& p);

// H_S − H_SP ε⁻¹ H_PS. SingularEpsilon when |ε| ≤ 1e-12.
CMatrix project(const FourLevelParams& p);

// ω₁ = Ω_1P²/(2εΩ₁), ω₂ = Ω_2P²/(2εΩ₁). With ε > 0 and non-negative
// couplings, effective_hamiltonian(effective_params(p)) equals project(p) for
// Ω₁ = 1, Ω₂ = 0.06; for ε < 0 the √(ω₁ω₂) entry has the opposite sign.
EffectiveParams effective_params(const FourLevelParams& p);

// ½ [[0, 1, 0.06], [1, −ω₁, −√(ω₁ω₂)], [0.06, −√(ω₁ω₂), −ω₂]].
// NegativeProduct when ω₁ω₂ < 0.
CMatrix effective_hamiltonian(const EffectiveParams& e);

// (Ω_1P, Ω_2P) = (√(2aγΩ₁), √(0.0015 bγΩ₁))
std::pair<double, double> coupling_from_rates(double omega1, double gamma, double a = 1.0,
                                              double b = 1.0);

}  // namespace mpemba::feshbach
