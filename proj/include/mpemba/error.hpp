#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpemba {

enum class Errc {
  InvalidArgument,
  DimensionMismatch,
  NotHermitian,
  NoConvergence,
  DegeneratePairing,
  NegativeEigenvalue,
  ZeroVector,
  InvalidState,
  DegenerateVariance,
  ZeroTau,
  ZeroEntropyRate,
  EnergyOutOfRange,
  StepSizeUnderflow,
  PositivityLoss,
  SingularEpsilon,
  NegativeProduct,
  Infeasible,
  BudgetExhausted,
  SimulationFailure,
  Parse,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  // Configuration/validation problems map to CLI exit code 2, everything else to 3.
  bool is_validation() const noexcept {
    return code_ == Errc::InvalidArgument || code_ == Errc::DimensionMismatch ||
           code_ == Errc::Parse || code_ == Errc::ZeroVector ||
           code_ == Errc::NegativeProduct || code_ == Errc::SingularEpsilon ||
           code_ == Errc::EnergyOutOfRange || code_ == Errc::InvalidState;
  }

 private:
  Errc code_;
};

}  // namespace mpemba
