#pragma once

// Population-MSE objective over simulated trajectories and the fit driver
// (Differential Evolution followed by a least-squares polish).

#include <array>
#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "mpemba/de.hpp"
#include "mpemba/lindblad.hpp"
#include "mpemba/qstate.hpp"
#include "mpemba/seaqt.hpp"

namespace mpemba::fitkit {

struct PopulationSeries {
  std::vector<double> times;                      // strictly increasing, ≥ 0
  std::vector<std::array<double, 3>> populations;  // P₀, P₁, P₂ per time
  std::vector<double> weights;                     // empty or one positive weight per time

  // InvalidArgument: empty, size mismatch, non-increasing times, a row whose
  // sum is off 1 by more than 0.05, non-positive weights.
  void validate() const;
};

enum class FitMode { Seaqt5, Seaqt3, LindbladRates };

std::string_view mode_name(FitMode mode) noexcept;  // "seaqt5", "seaqt3", "lindblad"

struct LabeledSeries {
  std::string label;
  DensityOperator initial = DensityOperator::unchecked(CMatrix());
  PopulationSeries series;
};

inline constexpr double kFailurePenalty = 1e6;

struct FitProblem {
  FitMode mode = FitMode::Seaqt5;
  // Free parameters: Seaqt5 (w1..w5), Seaqt3 (tau_d), LindbladRates (kappa1, kappa2).
  Bounds bounds;
  std::vector<LabeledSeries> data;
  std::uint64_t rng_seed = 0;

  double fixed_w1 = 2.53;    // Seaqt3
  double fixed_w2 = 0.026;   // Seaqt3
  lindblad::CaseStudyRates rates{};  // LindbladRates: Ω₁, Ω₂ taken from here
  seaqt::IntegrateOptions integrate{};
  DeConfig de{};
  bool polish = true;

  // InvalidArgument before any simulation on empty data or malformed bounds.
  void validate() const;
};

// Default bounds for each mode.
Bounds default_bounds(FitMode mode);

// Names for the reported parameter vector: (w1, w2, w3, w4, w5),
// (w1, w2, tau_d) or (kappa1, kappa2).
std::vector<std::string> parameter_names(FitMode mode);

// Free parameters → reported parameter vector (adds the fixed w1, w2 in Seaqt3).
std::vector<double> full_parameters(const FitProblem& problem, std::span<const double> free);

// Model populations of one series at its own time grid. Throws on
// simulation failure.
std::vector<std::array<double, 3>> simulate_populations(const FitProblem& problem,
                                                        std::span<const double> free,
                                                        const LabeledSeries& s);

// Σ over series, samples and levels of w·(P_model − P_exp)². Simulation
// failures cost kFailurePenalty and bump `failures` when given.
double mse(std::span<const double> free, const FitProblem& problem,
           std::atomic<std::size_t>* failures = nullptr);

struct FitResult {
  FitReport report;                       // best_params are the free parameters
  std::vector<std::string> names;
  std::vector<double> params;             // full reported vector
  std::vector<double> per_series_sse;     // residual breakdown by series
  std::vector<std::array<double, 3>> per_level_sse;  // and by level within each series
  std::size_t failed_evaluations = 0;
};

FitResult fit(const FitProblem& problem);

}  // namespace mpemba::fitkit
