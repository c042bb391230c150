#pragma once

// Initial conditions: the three printed pure states, and the search for pure
// states with no overlap on the slowest decaying Liouvillian mode.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mpemba/de.hpp"
#include "mpemba/lindblad.hpp"
#include "mpemba/qstate.hpp"

namespace mpemba::states {

enum class Table1Row { Ket0, Ket2, Sme };

inline constexpr std::array<Table1Row, 3> kTable1Rows = {Table1Row::Ket0, Table1Row::Ket2,
                                                         Table1Row::Sme};

std::string_view row_label(Table1Row row) noexcept;  // "ket0", "ket2", "sme"
std::optional<Table1Row> parse_row(std::string_view label) noexcept;

// Amplitudes as printed (rows 1 and 2 are not normalized).
PureStateSpec table1_amplitudes(Table1Row row);
DensityOperator table1_state(Table1Row row);

struct SmeConstraints {
  std::optional<std::array<double, 3>> target_populations;
  double overlap_tolerance = 1e-9;
  double entropy_tolerance = 1e-10;
  double population_tolerance = 1e-8;  // max |P_i − target_i| when targeted
};

struct SmeResiduals {
  double norm = 0.0;         // | ‖ψ‖ − 1 |
  double trace = 0.0;        // | Tr ρ − 1 |
  double purity = 0.0;       // ‖ρ² − ρ‖_F
  double entropy = 0.0;      // ⟨S⟩
  double overlap = 0.0;      // |Tr(L̂₁ρ)|
  double populations = 0.0;  // max |P_i − target_i|, 0 when untargeted
};

struct SmeResult {
  std::array<cplx, 3> amplitudes{};
  DensityOperator state = DensityOperator::unchecked(CMatrix());
  cplx overlap{};
  SmeResiduals residuals;
  std::uint64_t seed_used = 0;
};

struct SmeSearchOptions {
  DeConfig de{.population_size = 40,
              .mutation = 0.7,
              .crossover = 0.9,
              .max_generations = 200,
              .tolerance = 1e-8,
              .abs_tolerance = 1e-10,
              .seed = 0,
              .workers = 1,
              .keep_trace = false};
  std::size_t restarts = 8;
};

// Pure states ψ = (cos θ₁, sin θ₁ cos θ₂ e^{iφ₁}, sin θ₁ sin θ₂ e^{iφ₂}) with
// p₀ real ≥ 0. DE on |Φ|² (+ population mismatch), then a least-squares
// polish. Infeasible after `restarts` failed attempts.
SmeResult find_sme(const lindblad::LiouvillianSpectrum& spec, const SmeConstraints& c,
                   std::uint64_t seed, const SmeSearchOptions& options = {});

// `count` feasible states whose pairwise HS distances exceed 1e-6. Members are
// searched concurrently; acceptance is in seed order, so the result does not
// depend on the thread count.
std::vector<SmeResult> random_sme_ensemble(const lindblad::LiouvillianSpectrum& spec,
                                           const SmeConstraints& c, std::size_t count,
                                           std::uint64_t seed,
                                           const SmeSearchOptions& options = {});

}  // namespace mpemba::states
