#pragma once

// Embedded Dormand–Prince 5(4) stepper for matrix-valued ODEs.
//
// The stepper lands exactly on every requested sample time (the step is
// clipped), so no interpolation is involved in reported samples. A per-step
// hook sees each accepted state and may modify it (symmetrization, clipping);
// when it does, the FSAL derivative is recomputed.

#include <cstddef>
#include <functional>

#include "mpemba/matcore.hpp"

namespace mpemba::ode {

struct AdaptiveOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_initial = 0.0;  // 0 selects a starting step automatically
  double h_min = 1e-12;
  double h_max = 0.0;      // 0 means unbounded
  std::size_t max_steps = 2'000'000;
};

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
  double smallest_step = 0.0;
  double largest_step = 0.0;
};

class Dopri5 {
 public:
  using Rhs = std::function<void(double t, const CMatrix& y, CMatrix& dydt)>;
  // Returns true if it modified y.
  using StepHook = std::function<bool(double t, CMatrix& y)>;

  Dopri5(Rhs rhs, AdaptiveOptions options);

  // Integrates from t to t_end (t_end ≥ t); on return t == t_end.
  void advance(double& t, CMatrix& y, double t_end, const StepHook& hook = {});

  const StepStats& stats() const noexcept { return stats_; }

 private:
  double initial_step(double t, const CMatrix& y, const CMatrix& f0, double span);
  void eval(double t, const CMatrix& y, CMatrix& out);

  Rhs rhs_;
  AdaptiveOptions opt_;
  StepStats stats_;
  double h_ = 0.0;
  bool have_fsal_ = false;
  CMatrix k_[7];
  CMatrix stage_;
  CMatrix y_new_;
  CMatrix err_;
};

}  // namespace mpemba::ode
