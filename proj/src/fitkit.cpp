#include "mpemba/fitkit.hpp"

#include <cmath>
#include <sstream>

#include "mpemba/feshbach.hpp"

namespace mpemba::fitkit {

namespace {

std::size_t free_dim(FitMode mode) {
  switch (mode) {
    case FitMode::Seaqt5: return 5;
    case FitMode::Seaqt3: return 1;
    case FitMode::LindbladRates: return 2;
  }
  return 0;
}

std::vector<double> residual_vector(const FitProblem& problem, std::span<const double> free) {
  std::vector<double> r;
  for (const LabeledSeries& s : problem.data) {
    std::vector<std::array<double, 3>> model;
    try {
      model = simulate_populations(problem, free, s);
    } catch (const Error& e) {
      if (e.is_validation() && e.code() != Errc::NegativeProduct) throw;
      // Same total cost as the scalar penalty, spread over the entries.
      const std::size_t n = 3 * s.series.times.size();
      r.insert(r.end(), n, std::sqrt(kFailurePenalty / static_cast<double>(n)));
      continue;
    }
    for (std::size_t k = 0; k < model.size(); ++k) {
      const double w = s.series.weights.empty() ? 1.0 : std::sqrt(s.series.weights[k]);
      for (std::size_t i = 0; i < 3; ++i)
        r.push_back(w * (model[k][i] - s.series.populations[k][i]));
    }
  }
  return r;
}

}  // namespace

void PopulationSeries::validate() const {
  if (times.empty()) throw Error(Errc::InvalidArgument, "population series is empty");
  if (populations.size() != times.size())
    throw Error(Errc::DimensionMismatch, "population rows differ from number of times");
  if (!weights.empty() && weights.size() != times.size())
    throw Error(Errc::DimensionMismatch, "weight count differs from number of times");
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::ostringstream os;
    if (!std::isfinite(times[k]) || times[k] < 0.0) {
      os << "row " << k << ": time " << times[k] << " must be finite and >= 0";
      throw Error(Errc::InvalidArgument, os.str());
    }
    if (k > 0 && !(times[k] > times[k - 1])) {
      os << "row " << k << ": times must be strictly increasing";
      throw Error(Errc::InvalidArgument, os.str());
    }
    const double sum = populations[k][0] + populations[k][1] + populations[k][2];
    if (!std::isfinite(sum) || std::abs(sum - 1.0) > 0.05) {
      os << "row " << k << ": populations sum to " << sum << ", more than 0.05 from 1";
      throw Error(Errc::InvalidArgument, os.str());
    }
    if (!weights.empty() && !(weights[k] > 0.0 && std::isfinite(weights[k]))) {
      os << "row " << k << ": weight must be positive";
      throw Error(Errc::InvalidArgument, os.str());
    }
  }
}

std::string_view mode_name(FitMode mode) noexcept {
  switch (mode) {
    case FitMode::Seaqt5: return "seaqt5";
    case FitMode::Seaqt3: return "seaqt3";
    case FitMode::LindbladRates: return "lindblad";
  }
  return "?";
}

void FitProblem::validate() const {
  bounds.validate();
  if (bounds.dim() != free_dim(mode)) {
    std::ostringstream os;
    os << "mode " << mode_name(mode) << " has " << free_dim(mode) << " free parameters, got "
       << bounds.dim() << " bounds";
    throw Error(Errc::InvalidArgument, os.str());
  }
  if (data.empty()) throw Error(Errc::InvalidArgument, "fit problem has no data");
  for (const LabeledSeries& s : data) {
    if (s.initial.dim() != 3)
      throw Error(Errc::InvalidArgument, "series '" + s.label + "' has no 3-level initial state");
    s.series.validate();
  }
}

Bounds default_bounds(FitMode mode) {
  switch (mode) {
    case FitMode::Seaqt5:
      return Bounds{{{0.5, 5.0}, {0.0, 0.2}, {-20.0, 20.0}, {-50.0, 50.0}, {0.0, 100.0}}};
    case FitMode::Seaqt3:
      return Bounds{{{0.1, 100.0}}};
    case FitMode::LindbladRates:
      return Bounds{{{0.0, 10.0}, {0.0, 0.1}}};
  }
  return {};
}

std::vector<std::string> parameter_names(FitMode mode) {
  switch (mode) {
    case FitMode::Seaqt5: return {"w1", "w2", "w3", "w4", "w5"};
    case FitMode::Seaqt3: return {"w1", "w2", "tau_d"};
    case FitMode::LindbladRates: return {"kappa1", "kappa2"};
  }
  return {};
}

std::vector<double> full_parameters(const FitProblem& problem, std::span<const double> free) {
  if (problem.mode == FitMode::Seaqt3) return {problem.fixed_w1, problem.fixed_w2, free[0]};
  return {free.begin(), free.end()};
}

std::vector<std::array<double, 3>> simulate_populations(const FitProblem& problem,
                                                        std::span<const double> free,
                                                        const LabeledSeries& s) {
  if (free.size() != free_dim(problem.mode))
    throw Error(Errc::DimensionMismatch, "parameter vector size does not match fit mode");
  std::vector<std::array<double, 3>> out;
  out.reserve(s.series.times.size());
  auto push = [&out](const CMatrix& m) {
    out.push_back({m(0, 0).real(), m(1, 1).real(), m(2, 2).real()});
  };

  if (problem.mode == FitMode::LindbladRates) {
    lindblad::CaseStudyRates rates = problem.rates;
    rates.kappa1 = free[0];
    rates.kappa2 = free[1];
    const lindblad::LindbladModel model = lindblad::case_study_model(rates);
    const lindblad::LiouvillianSpectrum spec = lindblad::spectrum(model);
    const auto states = spec.modes_valid
                            ? lindblad::propagate_modes(spec, s.initial, s.series.times)
                            : lindblad::integrate_direct(model, s.initial, s.series.times);
    for (const DensityOperator& rho : states) push(rho.matrix());
    return out;
  }

  seaqt::SeaqtModel model;
  if (problem.mode == FitMode::Seaqt5) {
    model.hamiltonian = feshbach::effective_hamiltonian({free[0], free[1]});
    model.relaxation = seaqt::RelaxationModel::logistic(free[2], free[3], free[4]);
  } else {
    model.hamiltonian = feshbach::effective_hamiltonian({problem.fixed_w1, problem.fixed_w2});
    model.relaxation = seaqt::RelaxationModel::constant(free[0]);
  }
  seaqt::IntegrateOptions opt = problem.integrate;
  opt.compute_observables = false;
  const seaqt::Trajectory traj = seaqt::integrate(model, s.initial, s.series.times, opt);
  for (const seaqt::Sample& smp : traj.samples) push(smp.state.matrix());
  return out;
}

double mse(std::span<const double> free, const FitProblem& problem,
           std::atomic<std::size_t>* failures) {
  double total = 0.0;
  for (const LabeledSeries& s : problem.data) {
    std::vector<std::array<double, 3>> model;
    try {
      model = simulate_populations(problem, free, s);
    } catch (const Error& e) {
      if (e.is_validation() && e.code() != Errc::NegativeProduct) throw;
      if (failures) failures->fetch_add(1);
      return kFailurePenalty;
    }
    for (std::size_t k = 0; k < model.size(); ++k) {
      const double w = s.series.weights.empty() ? 1.0 : s.series.weights[k];
      for (std::size_t i = 0; i < 3; ++i) {
        const double d = model[k][i] - s.series.populations[k][i];
        total += w * d * d;
      }
    }
  }
  return std::isfinite(total) ? total : kFailurePenalty;
}

FitResult fit(const FitProblem& problem) {
  problem.validate();
  FitResult result;
  std::atomic<std::size_t> failures{0};
  DeConfig de = problem.de;
  de.seed = problem.rng_seed;
  result.report = differential_evolution(
      [&](std::span<const double> x) { return mse(x, problem, &failures); }, problem.bounds, de);

  if (problem.polish && result.report.best_mse < kFailurePenalty) {
    try {
      const PolishResult pol = least_squares_polish(
          [&](std::span<const double> x) { return residual_vector(problem, x); },
          result.report.best_params, problem.bounds);
      const double polished = mse(pol.params, problem, &failures);
      if (polished < result.report.best_mse) {
        result.report.best_params = pol.params;
        result.report.best_mse = polished;
        result.report.polished = true;
      }
    } catch (const Error&) {
      // The DE optimum stands if the polish walks into a failing region.
    }
  }

  result.names = parameter_names(problem.mode);
  result.params = full_parameters(problem, result.report.best_params);
  for (const LabeledSeries& s : problem.data) {
    std::array<double, 3> lv{0.0, 0.0, 0.0};
    try {
      const auto model = simulate_populations(problem, result.report.best_params, s);
      for (std::size_t k = 0; k < model.size(); ++k) {
        const double w = s.series.weights.empty() ? 1.0 : s.series.weights[k];
        for (std::size_t i = 0; i < 3; ++i) {
          const double d = model[k][i] - s.series.populations[k][i];
          lv[i] += w * d * d;
        }
      }
    } catch (const Error&) {
      lv = {kFailurePenalty, 0.0, 0.0};
    }
    result.per_level_sse.push_back(lv);
    result.per_series_sse.push_back(lv[0] + lv[1] + lv[2]);
  }
  result.failed_evaluations = failures.load();
  return result;
}

}  // namespace mpemba::fitkit
