#pragma once

// Bound-constrained Differential Evolution (rand/1/bin) and a damped
// Gauss–Newton (Levenberg–Marquardt) least-squares polish.
//
// Randomness is drawn from a generator seeded by (seed, generation,
// candidate), so a run is reproducible regardless of thread count.

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace mpemba {

struct Bounds {
  std::vector<std::pair<double, double>> limits;  // (low, high), low < high

  std::size_t dim() const noexcept { return limits.size(); }
  // InvalidArgument on empty, non-finite or inverted limits.
  void validate() const;
};

struct DeConfig {
  std::size_t population_size = 0;  // 0 selects 15 × dim
  double mutation = 0.7;            // F
  double crossover = 0.9;           // CR
  std::size_t max_generations = 1000;
  double tolerance = 1e-8;          // relative spread criterion
  double abs_tolerance = 0.0;       // absolute spread criterion
  std::uint64_t seed = 0;
  std::size_t workers = 0;          // 0 = worker_count()
  bool keep_trace = true;
};

struct FitReport {
  std::vector<double> best_params;
  double best_mse = 0.0;
  std::size_t generations = 0;
  std::size_t evaluations = 0;
  std::vector<double> population_trace;  // best value after each generation
  bool converged = false;
  bool polished = false;
};

using Objective = std::function<double(std::span<const double>)>;

// Converged when the population spread (standard deviation of objective
// values) is ≤ abs_tolerance + tolerance·|mean|. On reaching max_generations
// the best point is returned with converged = false.
FitReport differential_evolution(const Objective& objective, const Bounds& bounds,
                                 const DeConfig& config = {});

using Residuals = std::function<std::vector<double>(std::span<const double>)>;

struct PolishOptions {
  std::size_t max_iterations = 100;
  double relative_step = 1e-7;  // central-difference Jacobian step, relative to bound width
  double cost_tolerance = 1e-30;
  double step_tolerance = 1e-14;
};

struct PolishResult {
  std::vector<double> params;
  double cost = 0.0;  // Σ r²
  std::size_t iterations = 0;
};

// Levenberg–Marquardt on Σ r(x)², iterates clamped to the bounds.
PolishResult least_squares_polish(const Residuals& residuals, std::vector<double> x0,
                                  const Bounds& bounds, const PolishOptions& options = {});

}  // namespace mpemba
