#include "mpemba/feshbach.hpp"

#include <cmath>
#include <sstream>

namespace mpemba::feshbach {

CMatrix full_hamiltonian(const FourLevelParams& p) {
  CMatrix h(4, 4, {0.0, p.omega1, p.omega2, 0.0,
                   p.omega1, 0.0, 0.0, p.omega1P,
                   p.omega2, 0.0, 0.0, p.omega2P,
                   0.0, p.omega1P, p.omega2P, p.detuning});
  h *= 0.5;
  return h;
}

CMatrix project(const FourLevelParams& p) {
  if (!(std::abs(p.epsilon) > 1e-12)) {
    std::ostringstream os;
    os << "epsilon " << p.epsilon << " too close to zero for the projection";
    throw Error(Errc::SingularEpsilon, os.str());
  }
  CMatrix h(3, 3, {0.0, p.omega1, p.omega2,
                   p.omega1, 0.0, 0.0,
                   p.omega2, 0.0, 0.0});
  h *= 0.5;
  // H_SP = ½ v, H_PS = ½ vᵀ with v = (0, Ω_1P, Ω_2P).
  const double v[3] = {0.0, p.omega1P, p.omega2P};
  const double scale = 0.25 / p.epsilon;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) h(i, j) -= scale * v[i] * v[j];
  return h;
}

EffectiveParams effective_params(const FourLevelParams& p) {
  if (!(std::abs(p.epsilon) > 1e-12))
    throw Error(Errc::SingularEpsilon, "epsilon too close to zero");
  if (!(p.omega1 > 0.0)) throw Error(Errc::InvalidArgument, "omega1 must be positive");
  const double denom = 2.0 * p.epsilon * p.omega1;
  return {p.omega1P * p.omega1P / denom, p.omega2P * p.omega2P / denom};
}

CMatrix effective_hamiltonian(const EffectiveParams& e) {
  const double prod = e.w1 * e.w2;
  if (prod < 0.0) {
    std::ostringstream os;
    os << "w1*w2 = " << prod << " is negative; sqrt(w1*w2) would be imaginary";
    throw Error(Errc::NegativeProduct, os.str());
  }
  const double c = std::sqrt(prod);
  CMatrix h(3, 3, {0.0, 1.0, 0.06,
                   1.0, -e.w1, -c,
                   0.06, -c, -e.w2});
  h *= 0.5;
  return h;
}

std::pair<double, double> coupling_from_rates(double omega1, double gamma, double a, double b) {
  if (omega1 < 0.0 || gamma < 0.0 || a < 0.0 || b < 0.0)
    throw Error(Errc::InvalidArgument, "coupling inputs must be non-negative");
  return {std::sqrt(2.0 * a * gamma * omega1), std::sqrt(0.0015 * b * gamma * omega1)};
}

}  // namespace mpemba::feshbach
