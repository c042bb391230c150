#include "mpemba/de.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "mpemba/error.hpp"
#include "mpemba/parallel.hpp"

namespace mpemba {

namespace {

std::mt19937_64 rng_for(std::uint64_t seed, std::uint64_t generation, std::uint64_t candidate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(generation), static_cast<std::uint32_t>(candidate),
                    0x6d70u};
  return std::mt19937_64(seq);
}

double safe_eval(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

void Bounds::validate() const {
  if (limits.empty()) throw Error(Errc::InvalidArgument, "parameter bounds are empty");
  for (std::size_t j = 0; j < limits.size(); ++j) {
    const auto [lo, hi] = limits[j];
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      std::ostringstream os;
      os << "bound " << j << " = [" << lo << ", " << hi << "] is not a finite interval";
      throw Error(Errc::InvalidArgument, os.str());
    }
  }
}

FitReport differential_evolution(const Objective& objective, const Bounds& bounds,
                                 const DeConfig& config) {
  bounds.validate();
  const std::size_t dim = bounds.dim();
  const std::size_t np = config.population_size == 0 ? 15 * dim : config.population_size;
  if (np < 4) throw Error(Errc::InvalidArgument, "population size must be at least 4");
  if (!(config.mutation > 0.0 && config.mutation <= 2.0))
    throw Error(Errc::InvalidArgument, "mutation factor must lie in (0, 2]");
  if (!(config.crossover >= 0.0 && config.crossover <= 1.0))
    throw Error(Errc::InvalidArgument, "crossover rate must lie in [0, 1]");

  std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
  {
    // Latin hypercube: one sample per stratum in every coordinate.
    auto rng = rng_for(config.seed, 0, np);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::size_t> perm(np);
    for (std::size_t j = 0; j < dim; ++j) {
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const auto [lo, hi] = bounds.limits[j];
      for (std::size_t i = 0; i < np; ++i)
        pop[i][j] = lo + (hi - lo) * ((static_cast<double>(perm[i]) + u(rng)) / np);
    }
  }

  FitReport report;
  std::vector<double> energy(np);
  parallel_for(np, [&](std::size_t i) { energy[i] = safe_eval(objective, pop[i]); },
               config.workers);
  report.evaluations = np;

  auto best_index = [&] {
    return static_cast<std::size_t>(std::min_element(energy.begin(), energy.end()) -
                                    energy.begin());
  };
  auto spread_ok = [&] {
    double mean = 0.0;
    for (double e : energy) mean += e;
    mean /= static_cast<double>(np);
    if (!std::isfinite(mean)) return false;
    double var = 0.0;
    for (double e : energy) var += (e - mean) * (e - mean);
    const double sd = std::sqrt(var / static_cast<double>(np));
    return sd <= config.abs_tolerance + config.tolerance * std::abs(mean);
  };

  std::vector<std::vector<double>> trial(np, std::vector<double>(dim));
  std::vector<double> trial_energy(np);
  for (std::size_t gen = 1; gen <= config.max_generations; ++gen) {
    parallel_for(
        np,
        [&](std::size_t i) {
          auto rng = rng_for(config.seed, gen, i);
          std::uniform_int_distribution<std::size_t> pick(0, np - 1);
          std::uniform_real_distribution<double> u(0.0, 1.0);
          std::size_t r[3];
          for (int k = 0; k < 3; ++k) {
            do {
              r[k] = pick(rng);
            } while (r[k] == i || (k > 0 && r[k] == r[0]) || (k > 1 && r[k] == r[1]));
          }
          const std::size_t jrand = std::uniform_int_distribution<std::size_t>(0, dim - 1)(rng);
          std::vector<double>& x = trial[i];
          for (std::size_t j = 0; j < dim; ++j) {
            const double cr = u(rng);
            if (j == jrand || cr < config.crossover) {
              x[j] = pop[r[0]][j] + config.mutation * (pop[r[1]][j] - pop[r[2]][j]);
              const auto [lo, hi] = bounds.limits[j];
              if (x[j] < lo || x[j] > hi) x[j] = lo + (hi - lo) * u(rng);
            } else {
              x[j] = pop[i][j];
            }
          }
          trial_energy[i] = safe_eval(objective, x);
        },
        config.workers);
    report.evaluations += np;

    for (std::size_t i = 0; i < np; ++i) {
      if (trial_energy[i] <= energy[i]) {
        pop[i].swap(trial[i]);
        energy[i] = trial_energy[i];
      }
    }
    report.generations = gen;
    if (config.keep_trace) report.population_trace.push_back(energy[best_index()]);
    if (spread_ok()) {
      report.converged = true;
      break;
    }
  }

  const std::size_t b = best_index();
  report.best_params = pop[b];
  report.best_mse = energy[b];
  return report;
}

PolishResult least_squares_polish(const Residuals& residuals, std::vector<double> x0,
                                  const Bounds& bounds, const PolishOptions& options) {
  bounds.validate();
  const std::size_t n = bounds.dim();
  if (x0.size() != n) throw Error(Errc::DimensionMismatch, "start point size differs from bounds");
  auto clamp = [&](std::vector<double>& x) {
    for (std::size_t j = 0; j < n; ++j)
      x[j] = std::clamp(x[j], bounds.limits[j].first, bounds.limits[j].second);
  };
  auto cost_of = [](const std::vector<double>& r) {
    double c = 0.0;
    for (double v : r) c += v * v;
    return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
  };

  clamp(x0);
  PolishResult out;
  out.params = x0;
  std::vector<double> r = residuals(out.params);
  out.cost = cost_of(r);
  if (!std::isfinite(out.cost)) return out;
  const std::size_t m = r.size();
  double mu = -1.0;

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    if (out.cost <= options.cost_tolerance) break;
    Eigen::MatrixXd jac(m, n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto [lo, hi] = bounds.limits[j];
      const double h = options.relative_step * (hi - lo);
      std::vector<double> xp = out.params, xm = out.params;
      xp[j] = std::min(xp[j] + h, hi);
      xm[j] = std::max(xm[j] - h, lo);
      const double span = xp[j] - xm[j];
      const std::vector<double> rp = residuals(xp);
      const std::vector<double> rm = residuals(xm);
      for (std::size_t i = 0; i < m; ++i) jac(i, j) = (rp[i] - rm[i]) / span;
    }
    if (!jac.allFinite()) break;
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(m));
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * rv;
    Eigen::VectorXd scale = a.diagonal();
    const double smax = std::max(scale.maxCoeff(), 1e-300);
    for (Eigen::Index j = 0; j < scale.size(); ++j) scale[j] = std::max(scale[j], 1e-12 * smax);
    if (mu < 0.0) mu = 1e-3;

    bool accepted = false;
    bool small_step = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += mu * scale;
      const Eigen::VectorXd delta = damped.ldlt().solve(-g);
      std::vector<double> xn = out.params;
      for (std::size_t j = 0; j < n; ++j) xn[j] += delta[static_cast<Eigen::Index>(j)];
      clamp(xn);
      std::vector<double> rn = residuals(xn);
      const double cn = cost_of(rn);
      if (cn < out.cost) {
        double step = 0.0, norm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          step += (xn[j] - out.params[j]) * (xn[j] - out.params[j]);
          norm += out.params[j] * out.params[j];
        }
        out.params = std::move(xn);
        r = std::move(rn);
        out.cost = cn;
        mu = std::max(mu / 3.0, 1e-15);
        accepted = true;
        small_step =
            std::sqrt(step) <= options.step_tolerance * (std::sqrt(norm) + options.step_tolerance);
        break;
      }
      mu *= 4.0;
    }
    out.iterations = it + 1;
    if (!accepted || small_step) break;
  }
  return out;
}

}  // namespace mpemba
