#include "mpemba/seaqt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mpemba::seaqt {

namespace {

void require_hamiltonian(const CMatrix& h, std::size_t d) {
  if (h.rows() != d || h.cols() != d) {
    std::ostringstream os;
    os << "Hamiltonian is " << h.rows() << "x" << h.cols() << ", state dimension " << d;
    throw Error(Errc::DimensionMismatch, os.str());
  }
  if (!h.is_hermitian(1e-9)) throw Error(Errc::NotHermitian, "Hamiltonian is not Hermitian");
}

void require_tau(double tau) {
  if (!(std::abs(tau) > 1e-12)) {
    std::ostringstream os;
    os << "relaxation time " << tau << " is zero";
    throw Error(Errc::ZeroTau, os.str());
  }
}

// Entropy operator from an eigendecomposition, with non-positive and
// sub-cutoff eigenvalues treated as kernel.
CMatrix entropy_op(const HermEig& eig, double cutoff, double& entropy) {
  std::vector<double> s(eig.values.size(), 0.0);
  entropy = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double w = eig.values[k];
    if (w > cutoff) {
      s[k] = -std::log(w);
      entropy += w * s[k];
    }
  }
  return reconstruct(eig.vectors, s);
}

std::size_t count_support(std::span<const double> w, double cutoff) {
  return static_cast<std::size_t>(std::count_if(w.begin(), w.end(),
                                                [cutoff](double x) { return x > cutoff; }));
}

}  // namespace

RelaxationModel RelaxationModel::constant(double tau) {
  require_tau(tau);
  RelaxationModel m;
  m.kind = Kind::Constant;
  m.tau = tau;
  return m;
}

RelaxationModel RelaxationModel::logistic(double w3, double w4, double w5) {
  RelaxationModel m;
  m.kind = Kind::Logistic;
  m.w3 = w3;
  m.w4 = w4;
  m.w5 = w5;
  return m;
}

RelaxationModel RelaxationModel::fluctuation_diagnostic() {
  RelaxationModel m;
  m.kind = Kind::FluctuationDiagnostic;
  return m;
}

double tau_at(const RelaxationModel& model, double t) {
  double tau = 0.0;
  switch (model.kind) {
    case RelaxationModel::Kind::Constant:
      tau = model.tau;
      break;
    case RelaxationModel::Kind::Logistic:
      tau = model.w3 / (1.0 + std::exp(-(model.w4 + model.w5 * t)));
      break;
    case RelaxationModel::Kind::FluctuationDiagnostic:
      throw Error(Errc::InvalidArgument,
                  "fluctuation-ratio relaxation needs a state and an entropy rate");
  }
  require_tau(tau);
  return tau;
}

double tau_eval(const RelaxationModel& model, const DensityOperator& rho, const CMatrix& h,
                double t, double entropy_rate_estimate) {
  if (model.kind != RelaxationModel::Kind::FluctuationDiagnostic) return tau_at(model, t);
  if (entropy_rate_estimate == 0.0 || !std::isfinite(entropy_rate_estimate))
    throw Error(Errc::ZeroEntropyRate, "entropy production rate estimate is zero or not finite");
  const ThermoObservables obs = observables(rho, h);
  // β²σ_FF = σ_SS − σ_HS²/σ_HH, which stays finite as β → 0.
  const double tau =
      (obs.sigma_ss - obs.sigma_hs * obs.sigma_hs / obs.sigma_hh) / entropy_rate_estimate;
  require_tau(tau);
  return tau;
}

ThermoObservables observe(const DensityOperator& rho, const CMatrix& h, double tau) {
  require_hamiltonian(h, rho.dim());
  const HermEig eig = herm_eig(rho.matrix());
  ThermoObservables o;
  const CMatrix s = entropy_op(eig, kSupportCutoff, o.entropy);
  o.energy = expectation(rho, h);
  o.sigma_hh = covariance(rho, h, h);
  o.sigma_hs = covariance(rho, h, s);
  o.sigma_ss = covariance(rho, s, s);
  if (!(o.sigma_hh > kVarianceFloor)) return o;

  // A flat entropy operator on the support (pure or maximally mixed within
  // it) leaves σ_HS as pure roundoff.
  if (!(o.sigma_ss > kVarianceFloor)) o.sigma_hs = 0.0;
  o.beta_defined = true;
  o.beta = o.sigma_hs / o.sigma_hh;
  o.heat_capacity = o.beta * o.beta * o.sigma_hh;
  if (std::isfinite(tau) && tau != 0.0)
    o.entropy_rate = std::max(o.sigma_ss - o.sigma_hs * o.beta, 0.0) / tau;
  if (o.beta != 0.0) {
    CMatrix f = h;
    f.axpy(-1.0 / o.beta, s);
    o.sigma_ff = covariance(rho, f, f);
    o.sigma_fs = covariance(rho, f, s);
    o.free_energy = expectation(rho, f);
    o.phi_seaqt = o.sigma_ff;
  }
  return o;
}

ThermoObservables observables(const DensityOperator& rho, const CMatrix& h, double tau) {
  ThermoObservables o = observe(rho, h, tau);
  if (!o.beta_defined) {
    std::ostringstream os;
    os << "energy variance " << o.sigma_hh << " <= " << kVarianceFloor << ", beta undefined";
    throw Error(Errc::DegenerateVariance, os.str());
  }
  return o;
}

CMatrix dissipation_operator(const DensityOperator& rho, const CMatrix& h) {
  require_hamiltonian(h, rho.dim());
  const HermEig eig = herm_eig(rho.matrix());
  double entropy = 0.0;
  const CMatrix s = entropy_op(eig, kSupportCutoff, entropy);
  const double energy = expectation(rho, h);
  const double shh = covariance(rho, h, h);
  if (!(shh > kVarianceFloor))
    throw Error(Errc::DegenerateVariance, "energy variance vanishes, beta undefined");
  const double beta = covariance(rho, h, s) / shh;

  const std::size_t d = rho.dim();
  CMatrix x = beta * h;
  x -= s;
  const double shift = entropy - beta * energy;
  for (std::size_t i = 0; i < d; ++i) x(i, i) += shift;
  return 0.5 * acomm(x, rho.matrix());
}

CMatrix eom_rhs(const CMatrix& rho, const CMatrix& h, double tau, std::size_t support_rank) {
  require_tau(tau);
  const std::size_t d = rho.rows();
  require_hamiltonian(h, d);
  const HermEig eig = herm_eig(rho);
  const std::vector<double>& w = eig.values;
  const CMatrix& v = eig.vectors;
  if (support_rank > d) throw Error(Errc::InvalidArgument, "support rank exceeds dimension");
  const std::size_t rank = support_rank == 0 ? count_support(w, kSupportCutoff) : support_rank;
  const std::size_t first = d - rank;

  // Everything below lives in the eigenbasis of ρ, where S is diagonal.
  CMatrix tmp;
  CMatrix hp;
  multiply_into(v.adjoint(), h, tmp);
  multiply_into(tmp, v, hp);

  std::vector<double> s(d, 0.0);
  double energy = 0.0, entropy = 0.0, h2 = 0.0, hs = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    if (k >= first) s[k] = -std::log(std::max(w[k], kSupportCutoff));
    const double hkk = hp(k, k).real();
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += std::norm(hp(k, j));
    energy += w[k] * hkk;
    entropy += w[k] * s[k];
    h2 += w[k] * row;
    hs += w[k] * s[k] * hkk;
  }
  const double shh = h2 - energy * energy;
  if (!(shh > kVarianceFloor))
    throw Error(Errc::DegenerateVariance, "energy variance vanishes, beta undefined");
  const double beta = (hs - energy * entropy) / shh;

  const double inv_tau = 1.0 / tau;
  CMatrix rp(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t l = 0; l < d; ++l) {
      if (k == l) {
        const double x = beta * (hp(k, k).real() - energy) - (s[k] - entropy);
        rp(k, k) = -inv_tau * w[k] * x;
      } else {
        const cplx hkl = hp(k, l);
        rp(k, l) = cplx{0.0, -1.0} * hkl * (w[l] - w[k]) -
                   (0.5 * inv_tau * (w[k] + w[l]) * beta) * hkl;
      }
    }
  }
  multiply_into(v, rp, tmp);
  CMatrix out;
  multiply_into(tmp, v.adjoint(), out);
  return hermitian_part(out);
}

CMatrix eom_rhs(const DensityOperator& rho, const SeaqtModel& model, double t) {
  return eom_rhs(rho.matrix(), model.hamiltonian, tau_at(model.relaxation, t));
}

double log_partition(std::span<const double> energies, double beta) {
  double m = -std::numeric_limits<double>::infinity();
  for (double e : energies) m = std::max(m, -beta * e);
  double sum = 0.0;
  for (double e : energies) sum += std::exp(-beta * e - m);
  return m + std::log(sum);
}

long double log_partition_ld(std::span<const double> energies, long double beta) {
  long double m = -std::numeric_limits<long double>::infinity();
  for (double e : energies) m = std::max(m, -beta * e);
  long double sum = 0.0L;
  for (double e : energies) sum += std::exp(-beta * static_cast<long double>(e) - m);
  return m + std::log(sum);
}

GibbsState gibbs_state(const CMatrix& h, double beta) {
  if (!h.is_square()) throw Error(Errc::DimensionMismatch, "Hamiltonian must be square");
  if (!h.is_hermitian(1e-9)) throw Error(Errc::NotHermitian, "Hamiltonian is not Hermitian");
  if (!std::isfinite(beta)) throw Error(Errc::InvalidArgument, "beta must be finite");
  const HermEig eig = herm_eig(h);
  GibbsState g;
  g.beta_eq = beta;
  g.log_partition = log_partition(eig.values, beta);
  g.partition = std::exp(g.log_partition);
  std::vector<double> p(eig.values.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(-beta * eig.values[k] - g.log_partition);
    total += p[k];
  }
  for (double& x : p) x /= total;
  g.state = DensityOperator::unchecked(hermitian_part(reconstruct(eig.vectors, p)));
  return g;
}

GibbsState equilibrium_state(const CMatrix& h, double energy) {
  if (!h.is_square()) throw Error(Errc::DimensionMismatch, "Hamiltonian must be square");
  const HermEig eig = herm_eig(h);
  const std::vector<double>& e = eig.values;
  if (!(energy > e.front() && energy < e.back())) {
    std::ostringstream os;
    os << "energy " << energy << " outside the open interval (" << e.front() << ", " << e.back()
       << ")";
    throw Error(Errc::EnergyOutOfRange, os.str());
  }

  // U(β) = Σ e_k p_k(β) is strictly decreasing with U'(β) = −σ_HH(β).
  auto moments = [&](double beta, double& u, double& var) {
    const double lz = log_partition(e, beta);
    u = 0.0;
    double u2 = 0.0;
    for (double x : e) {
      const double p = std::exp(-beta * x - lz);
      u += p * x;
      u2 += p * x * x;
    }
    var = std::max(u2 - u * u, 0.0);
  };

  double u = 0.0, var = 0.0;
  double lo = -1.0, hi = 1.0;
  for (moments(lo, u, var); u <= energy; moments(lo, u, var)) {
    lo *= 2.0;
    if (lo < -1e8) throw Error(Errc::NoConvergence, "cannot bracket beta_eq from below");
  }
  for (moments(hi, u, var); u >= energy; moments(hi, u, var)) {
    hi *= 2.0;
    if (hi > 1e8) throw Error(Errc::NoConvergence, "cannot bracket beta_eq from above");
  }

  const double scale = std::max({1.0, std::abs(e.front()), std::abs(e.back())});
  double beta = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    moments(beta, u, var);
    const double g = u - energy;
    if (std::abs(g) <= 4e-16 * scale) break;
    if (g > 0.0) lo = beta; else hi = beta;
    double next = var > 0.0 ? beta + g / var : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(beta)) || next == beta) break;
    beta = next;
  }
  return gibbs_state(h, beta);
}

std::size_t TrajectoryDiagnostics::invariant_violations() const {
  std::size_t n = entropy_violations;
  if (max_trace_drift > 1e-9) ++n;
  if (max_energy_drift > 1e-6) ++n;
  if (min_eigenvalue < -1e-8) ++n;
  return n;
}

Trajectory integrate(const SeaqtModel& model, const DensityOperator& rho_in,
                     std::span<const double> times, const IntegrateOptions& options) {
  const std::size_t d = rho_in.dim();
  const CMatrix& h = model.hamiltonian;
  require_hamiltonian(h, d);
  if (model.relaxation.kind == RelaxationModel::Kind::FluctuationDiagnostic)
    throw Error(Errc::InvalidArgument,
                "the fluctuation-ratio relaxation time is diagnostic only and cannot drive "
                "the integrator");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0)) throw Error(Errc::InvalidArgument, "sample times must be >= 0");
    if (k > 0 && times[k] < times[k - 1])
      throw Error(Errc::InvalidArgument, "sample times must be ascending");
  }
  const double cutoff = options.support_cutoff;

  Trajectory traj;
  TrajectoryDiagnostics& diag = traj.diag;
  DensityOperator start = rho_in;
  {
    const HermEig e0 = herm_eig(rho_in.matrix());
    if (count_support(e0.values, cutoff) < d && options.regularization > 0.0) {
      start = regularize(rho_in, options.regularization);
      diag.regularized = true;
      diag.eta = options.regularization;
    }
  }
  const double energy0 = expectation(start, h);
  CMatrix y = start.matrix();
  HermEig ey = herm_eig(y);
  std::size_t rank = count_support(ey.values, cutoff);
  diag.min_eigenvalue = ey.values.front();
  double entropy_prev = 0.0;
  for (double w : ey.values)
    if (w > cutoff) entropy_prev -= w * std::log(w);
  double t_prev = 0.0;

  const RelaxationModel relax = model.relaxation;
  ode::Dopri5 stepper(
      [&](double t, const CMatrix& state, CMatrix& out) {
        out = eom_rhs(state, h, tau_at(relax, t), rank);
      },
      options.adaptive);

  auto hook = [&](double t, CMatrix& state) -> bool {
    bool modified = false;
    HermEig e = herm_eig(state);
    diag.min_eigenvalue = std::min(diag.min_eigenvalue, e.values.front());
    if (e.values.front() < -options.clip_threshold) {
      ++diag.positivity_clips;
      std::ostringstream os;
      os << "eigenvalue " << e.values.front() << " clipped at t = " << t;
      diag.warnings.push_back(os.str());
      double tr = 0.0;
      for (double& w : e.values) tr += (w = std::max(w, 0.0));
      for (double& w : e.values) w /= tr;
      state = hermitian_part(reconstruct(e.vectors, e.values));
      modified = true;
    }

    // Support hysteresis: leave on a drop below the cutoff, return only above 10×.
    while (rank > 0 && e.values[d - rank] < cutoff) {
      --rank;
      ++diag.rank_changes;
    }
    while (rank < d && e.values[d - rank - 1] > 10.0 * cutoff) {
      ++rank;
      ++diag.rank_changes;
    }

    double entropy = 0.0;
    for (std::size_t k = d - rank; k < d; ++k)
      if (e.values[k] > 0.0) entropy -= e.values[k] * std::log(e.values[k]);
    const double ds = entropy - entropy_prev;
    if (tau_at(relax, t_prev) > 0.0 && tau_at(relax, t) > 0.0) {
      diag.worst_entropy_step = std::min(diag.worst_entropy_step, ds);
      if (ds < -1e-9) ++diag.entropy_violations;
    } else {
      if (diag.negative_tau_steps == 0)
        diag.warnings.push_back("relaxation time negative: entropy monotonicity not asserted");
      ++diag.negative_tau_steps;
    }
    entropy_prev = entropy;
    t_prev = t;
    return modified;
  };

  traj.samples.reserve(times.size());
  double t = 0.0;
  for (double target : times) {
    stepper.advance(t, y, target, hook);
    Sample s;
    s.t = target;
    s.state = DensityOperator::unchecked(y);
    s.tau = tau_at(relax, target);
    diag.max_trace_drift = std::max(diag.max_trace_drift, std::abs(y.trace().real() - 1.0));
    diag.max_energy_drift =
        std::max(diag.max_energy_drift, std::abs(trace_product(y, h).real() - energy0));
    if (options.compute_observables) s.obs = observe(s.state, h, s.tau);
    traj.samples.push_back(std::move(s));
  }
  diag.steps = stepper.stats();
  return traj;
}

}  // namespace mpemba::seaqt
