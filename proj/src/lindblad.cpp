#include "mpemba/lindblad.hpp"

#include <cmath>
#include <sstream>

namespace mpemba::lindblad {

namespace {

void require_times(std::span<const double> times) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0)) throw Error(Errc::InvalidArgument, "sample times must be >= 0");
    if (k > 0 && times[k] < times[k - 1])
      throw Error(Errc::InvalidArgument, "sample times must be ascending");
  }
}

// Phase that makes a mode of the form e^{iθ}·(Hermitian) exactly Hermitian:
// Tr(R R) = e^{2iθ} Tr(K²) for R = e^{iθ}K. The sign is fixed by the largest
// diagonal entry so the choice is deterministic.
cplx mode_gauge(const CMatrix& r) {
  const cplx t = trace_product(r, r);
  if (std::abs(t) < 1e-300) return 1.0;
  cplx g = std::polar(1.0, -0.5 * std::arg(t));
  std::size_t best = 0;
  for (std::size_t k = 1; k < r.rows(); ++k)
    if (std::abs(r(k, k)) > std::abs(r(best, best))) best = k;
  if ((g * r(best, best)).real() < 0.0) g = -g;
  return g;
}

CMatrix finish_sample(CMatrix m) {
  m = hermitian_part(m);
  const double tr = m.trace().real();
  m /= tr;
  return m;
}

}  // namespace

LindbladModel case_study_model(const CaseStudyRates& rates) {
  if (rates.kappa1 < 0.0 || rates.kappa2 < 0.0)
    throw Error(Errc::InvalidArgument, "decay rates must be non-negative");
  LindbladModel model;
  model.hamiltonian = CMatrix(3, 3, {0.0, 0.5 * rates.omega1, 0.5 * rates.omega2,
                                     0.5 * rates.omega1, 0.0, 0.0,
                                     0.5 * rates.omega2, 0.0, 0.0});
  CMatrix j1(3, 3);
  j1(0, 1) = std::sqrt(rates.kappa1);
  CMatrix j2(3, 3);
  j2(0, 2) = std::sqrt(rates.kappa2);
  model.jumps = {j1, j2};
  model.kappa1 = rates.kappa1;
  model.kappa2 = rates.kappa2;
  return model;
}

CMatrix master_rhs(const LindbladModel& model, const CMatrix& rho) {
  const CMatrix& h = model.hamiltonian;
  if (rho.rows() != h.rows() || rho.cols() != h.cols())
    throw Error(Errc::DimensionMismatch, "master_rhs: state and Hamiltonian sizes differ");
  CMatrix out = comm(h, rho);
  out *= cplx{0.0, -1.0};
  for (const CMatrix& j : model.jumps) {
    const CMatrix jd = j.adjoint();
    const CMatrix jdj = jd * j;
    out += j * rho * jd;
    out.axpy(-0.5, jdj * rho);
    out.axpy(-0.5, rho * jdj);
  }
  return out;
}

CMatrix build_liouvillian(const LindbladModel& model) {
  const CMatrix& h = model.hamiltonian;
  if (!h.is_square()) throw Error(Errc::DimensionMismatch, "Hamiltonian must be square");
  const std::size_t d = h.rows();
  const CMatrix id = CMatrix::identity(d);
  CMatrix l = kron(id, h) - kron(h.transpose(), id);
  l *= cplx{0.0, -1.0};
  for (const CMatrix& j : model.jumps) {
    if (j.rows() != d || j.cols() != d)
      throw Error(Errc::DimensionMismatch, "jump operator size differs from Hamiltonian");
    const CMatrix jdj = j.adjoint() * j;
    l += kron(j.conjugate(), j);
    l.axpy(-0.5, kron(id, jdj));
    l.axpy(-0.5, kron(jdj.transpose(), id));
  }
  return l;
}

LiouvillianSpectrum spectrum(const LindbladModel& model) {
  LiouvillianSpectrum spec;
  spec.dim = model.hamiltonian.rows();
  spec.matrix = build_liouvillian(model);
  const GenEig eig = gen_eig(spec.matrix);
  const std::size_t n = eig.values.size();
  spec.eigenvalues = eig.values;
  spec.modes_valid = eig.biorthonormal;
  spec.pairing_condition = eig.pairing_condition;
  spec.right_modes.reserve(n);
  spec.left_modes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CMatrix r(n, 1);
    CMatrix y(n, 1);
    for (std::size_t k = 0; k < n; ++k) {
      r(k, 0) = eig.right(k, i);
      y(k, 0) = eig.left(k, i);
    }
    // Unit-modulus gauge applied to both vectors keeps y†r unchanged.
    const cplx g = mode_gauge(unvec(r, spec.dim));
    r *= g;
    y *= g;
    spec.right_modes.push_back(unvec(r, spec.dim));
    // Row left eigenvector is y†; Tr(L̂ ρ) = y† vec(ρ) gives L̂ = unvec(y)†.
    spec.left_modes.push_back(unvec(y, spec.dim).adjoint());
  }

  // R̂₀ → R̂₀ / Tr R̂₀ with L̂₀ scaled inversely so the pair stays biorthonormal.
  const cplx tr0 = spec.right_modes.front().trace();
  if (std::abs(tr0) < 1e-12)
    throw Error(Errc::DegeneratePairing, "leading right mode has vanishing trace");
  spec.right_modes.front() /= tr0;
  spec.left_modes.front() *= tr0;
  spec.steady_state = finish_sample(spec.right_modes.front());
  return spec;
}

std::vector<DensityOperator> propagate_modes(const LiouvillianSpectrum& spec,
                                             const DensityOperator& rho_in,
                                             std::span<const double> times) {
  if (!spec.modes_valid) {
    std::ostringstream os;
    os << "mode expansion unavailable (pairing condition " << spec.pairing_condition << ")";
    throw Error(Errc::DegeneratePairing, os.str());
  }
  if (rho_in.dim() != spec.dim)
    throw Error(Errc::DimensionMismatch, "initial state dimension differs from model");
  require_times(times);
  const std::size_t n = spec.eigenvalues.size();
  std::vector<cplx> coeff(n);
  for (std::size_t i = 0; i < n; ++i)
    coeff[i] = trace_product(spec.left_modes[i], rho_in.matrix());

  std::vector<DensityOperator> out;
  out.reserve(times.size());
  for (double t : times) {
    CMatrix m(spec.dim, spec.dim);
    for (std::size_t i = 0; i < n; ++i)
      m.axpy(coeff[i] * std::exp(spec.eigenvalues[i] * t), spec.right_modes[i]);
    out.push_back(DensityOperator::unchecked(finish_sample(std::move(m))));
  }
  return out;
}

std::vector<DensityOperator> integrate_direct(const LindbladModel& model,
                                              const DensityOperator& rho_in,
                                              std::span<const double> times,
                                              double max_step) {
  if (!(max_step > 1e-12)) throw Error(Errc::StepSizeUnderflow, "max_step must exceed 1e-12");
  if (rho_in.dim() != model.hamiltonian.rows())
    throw Error(Errc::DimensionMismatch, "initial state dimension differs from model");
  require_times(times);

  std::vector<DensityOperator> out;
  out.reserve(times.size());
  CMatrix y = rho_in.matrix();
  double t = 0.0;
  for (double target : times) {
    const double span = target - t;
    if (span > 0.0) {
      const auto steps = static_cast<std::size_t>(std::ceil(span / max_step));
      const double h = span / static_cast<double>(steps);
      for (std::size_t s = 0; s < steps; ++s) {
        const CMatrix k1 = master_rhs(model, y);
        const CMatrix k2 = master_rhs(model, y + (0.5 * h) * k1);
        const CMatrix k3 = master_rhs(model, y + (0.5 * h) * k2);
        const CMatrix k4 = master_rhs(model, y + h * k3);
        y.axpy(h / 6.0, k1);
        y.axpy(h / 3.0, k2);
        y.axpy(h / 3.0, k3);
        y.axpy(h / 6.0, k4);
      }
      t = target;
    }
    out.push_back(DensityOperator::unchecked(hermitian_part(y)));
  }
  return out;
}

cplx mpemba_overlap(const LiouvillianSpectrum& spec, const CMatrix& rho) {
  if (!spec.modes_valid || spec.left_modes.size() < 2)
    throw Error(Errc::DegeneratePairing, "slowest decaying left mode is not well defined");
  return trace_product(spec.left_modes[1], rho);
}

cplx mpemba_overlap(const LiouvillianSpectrum& spec, const DensityOperator& rho_in) {
  return mpemba_overlap(spec, rho_in.matrix());
}

}  // namespace mpemba::lindblad
