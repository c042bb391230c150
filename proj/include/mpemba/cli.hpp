#pragma once

// Command-line surface: simulate, spectrum, fit, sme-search.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 numerical failure.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mpemba/lindblad.hpp"
#include "mpemba/seaqt.hpp"

namespace mpemba::cli {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  enum class Framework { Seaqt, Lindblad, Both };
  Framework framework = Framework::Seaqt;
  // SEAQT Hamiltonian: H_eff(w1, w2), or the bare case-study Hamiltonian.
  bool case_study_hamiltonian = false;
  double w1 = 2.53;
  double w2 = 0.026;
  seaqt::RelaxationModel relaxation = seaqt::RelaxationModel::constant(1.0);
  lindblad::CaseStudyRates rates{};
  std::string initial = "ket0";  // Table I label, or "custom" with amplitudes
  std::optional<std::array<cplx, 3>> amplitudes;
  double t_max = 50.0;
  std::size_t samples = 101;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  double regularization = 1e-6;
  double rtol = 1e-8;
  double atol = 1e-10;

  // InvalidArgument on t_max ≤ 0, samples < 2, bad tolerances or labels.
  void validate() const;
};

// JSON config text → RunConfig (schema_version must be 1). Parse on
// malformed JSON, InvalidArgument on unknown values.
RunConfig parse_run_config(std::string_view json_text);

// Entry point used by the mpemba executable.
int run(int argc, char** argv);

}  // namespace mpemba::cli
