#include "mpemba/states.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mpemba/parallel.hpp"

namespace mpemba::states {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::array<cplx, 3> amplitudes_of(std::span<const double> x) {
  const double s1 = std::sin(x[0]);
  return {cplx{std::cos(x[0]), 0.0}, std::polar(s1 * std::cos(x[1]), x[2]),
          std::polar(s1 * std::sin(x[1]), x[3])};
}

CMatrix projector(const std::array<cplx, 3>& a) {
  CMatrix m(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = a[i] * std::conj(a[j]);
  return hermitian_part(m);
}

Bounds search_bounds() {
  const double half_pi = 0.5 * std::numbers::pi;
  const double pi = std::numbers::pi;
  return Bounds{{{0.0, half_pi}, {0.0, half_pi}, {-pi, pi}, {-pi, pi}}};
}

SmeResult evaluate(const lindblad::LiouvillianSpectrum& spec, const SmeConstraints& c,
                   std::span<const double> x) {
  SmeResult r;
  r.amplitudes = amplitudes_of(x);
  double norm_sq = 0.0;
  for (const cplx& a : r.amplitudes) norm_sq += std::norm(a);
  const CMatrix m = projector(r.amplitudes);
  r.state = DensityOperator::unchecked(m);
  r.overlap = lindblad::mpemba_overlap(spec, m);
  r.residuals.norm = std::abs(std::sqrt(norm_sq) - 1.0);
  r.residuals.trace = std::abs(m.trace().real() - 1.0);
  r.residuals.purity = (m * m - m).frobenius_norm();
  r.residuals.entropy = entropy_context(r.state).entropy;
  r.residuals.overlap = std::abs(r.overlap);
  if (c.target_populations)
    for (std::size_t i = 0; i < 3; ++i)
      r.residuals.populations = std::max(
          r.residuals.populations, std::abs(m(i, i).real() - (*c.target_populations)[i]));
  return r;
}

bool feasible(const SmeResult& r, const SmeConstraints& c) {
  return r.residuals.norm <= 1e-12 && r.residuals.trace <= 1e-12 && r.residuals.purity <= 1e-10 &&
         r.residuals.entropy <= c.entropy_tolerance && r.residuals.overlap <= c.overlap_tolerance &&
         r.residuals.populations <= c.population_tolerance;
}

std::vector<double> residual_vector(const lindblad::LiouvillianSpectrum& spec,
                                    const SmeConstraints& c, std::span<const double> x) {
  const std::array<cplx, 3> a = amplitudes_of(x);
  const cplx phi = lindblad::mpemba_overlap(spec, projector(a));
  std::vector<double> r = {phi.real(), phi.imag()};
  if (c.target_populations)
    for (std::size_t i = 0; i < 3; ++i) r.push_back(std::norm(a[i]) - (*c.target_populations)[i]);
  return r;
}

void validate(const SmeConstraints& c) {
  if (!(c.overlap_tolerance > 0.0) || !(c.entropy_tolerance > 0.0) ||
      !(c.population_tolerance > 0.0))
    throw Error(Errc::InvalidArgument, "sME tolerances must be positive");
  if (c.target_populations) {
    double sum = 0.0;
    for (double p : *c.target_populations) {
      if (!(p >= 0.0 && p <= 1.0))
        throw Error(Errc::InvalidArgument, "target populations must lie in [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error(Errc::InvalidArgument, "target populations must sum to 1");
  }
}

// One DE + polish attempt.
SmeResult attempt(const lindblad::LiouvillianSpectrum& spec, const SmeConstraints& c,
                  std::uint64_t seed, const SmeSearchOptions& options) {
  const Bounds bounds = search_bounds();
  DeConfig de = options.de;
  de.seed = seed;
  const FitReport rep = differential_evolution(
      [&](std::span<const double> x) {
        double v = 0.0;
        for (double r : residual_vector(spec, c, x)) v += r * r;
        return v;
      },
      bounds, de);
  const PolishResult pol = least_squares_polish(
      [&](std::span<const double> x) { return residual_vector(spec, c, x); }, rep.best_params,
      bounds);
  SmeResult r = evaluate(spec, c, pol.params);
  r.seed_used = seed;
  return r;
}

}  // namespace

std::string_view row_label(Table1Row row) noexcept {
  switch (row) {
    case Table1Row::Ket0: return "ket0";
    case Table1Row::Ket2: return "ket2";
    case Table1Row::Sme: return "sme";
  }
  return "?";
}

std::optional<Table1Row> parse_row(std::string_view label) noexcept {
  for (Table1Row r : kTable1Rows)
    if (row_label(r) == label) return r;
  return std::nullopt;
}

PureStateSpec table1_amplitudes(Table1Row row) {
  switch (row) {
    case Table1Row::Ket0: return {{0.96, 0.003, 0.03}};
    case Table1Row::Ket2: return {{0.03, 0.003, 0.967}};
    case Table1Row::Sme: return {{0.8, {0.176, 0.283}, {0.196, -0.459}}};
  }
  throw Error(Errc::InvalidArgument, "unknown initial-state row");
}

DensityOperator table1_state(Table1Row row) { return from_pure(table1_amplitudes(row)); }

SmeResult find_sme(const lindblad::LiouvillianSpectrum& spec, const SmeConstraints& c,
                   std::uint64_t seed, const SmeSearchOptions& options) {
  validate(c);
  if (spec.dim != 3) throw Error(Errc::DimensionMismatch, "sME search is defined for d = 3");
  SmeResult best;
  bool have = false;
  for (std::size_t k = 0; k <= options.restarts; ++k) {
    SmeResult r = attempt(spec, c, k == 0 ? seed : splitmix(seed + k), options);
    if (feasible(r, c)) return r;
    if (!have || r.residuals.overlap + r.residuals.populations <
                     best.residuals.overlap + best.residuals.populations) {
      best = std::move(r);
      have = true;
    }
  }
  std::ostringstream os;
  os << "no feasible sME state after " << options.restarts + 1 << " attempts; best |overlap| "
     << best.residuals.overlap << ", population mismatch " << best.residuals.populations
     << ", entropy " << best.residuals.entropy;
  throw Error(Errc::Infeasible, os.str());
}

std::vector<SmeResult> random_sme_ensemble(const lindblad::LiouvillianSpectrum& spec,
                                           const SmeConstraints& c, std::size_t count,
                                           std::uint64_t seed, const SmeSearchOptions& options) {
  validate(c);
  if (count < 1) throw Error(Errc::InvalidArgument, "ensemble size must be at least 1");
  const std::size_t budget = 3 * count + 10;
  std::vector<SmeResult> accepted;
  accepted.reserve(count);
  std::size_t next = 0;
  while (accepted.size() < count && next < budget) {
    const std::size_t batch = std::min(budget - next, count - accepted.size());
    std::vector<std::optional<SmeResult>> found(batch);
    parallel_for(batch, [&](std::size_t i) {
      SmeSearchOptions single = options;
      single.restarts = 0;
      try {
        found[i] = find_sme(spec, c, splitmix(seed ^ (0x5bd1e995ull * (next + i + 1))), single);
      } catch (const Error& e) {
        if (e.code() != Errc::Infeasible) throw;
      }
    });
    next += batch;
    for (auto& f : found) {
      if (!f || accepted.size() == count) continue;
      const bool distinct = std::all_of(accepted.begin(), accepted.end(), [&](const SmeResult& a) {
        return hs_distance(a.state, f->state) > 1e-6;
      });
      if (distinct) accepted.push_back(std::move(*f));
    }
  }
  if (accepted.size() < count) {
    std::ostringstream os;
    os << "found " << accepted.size() << " of " << count << " distinct sME states within "
       << budget << " attempts";
    throw Error(Errc::Infeasible, os.str());
  }
  return accepted;
}

}  // namespace mpemba::states
