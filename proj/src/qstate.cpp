#include "mpemba/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mpemba {

namespace {

void require_dims(const DensityOperator& rho, const CMatrix& f, const char* what) {
  if (f.rows() != rho.dim() || f.cols() != rho.dim()) {
    std::ostringstream os;
    os << what << ": operator is " << f.rows() << "x" << f.cols() << ", state dimension "
       << rho.dim();
    throw Error(Errc::DimensionMismatch, os.str());
  }
}

}  // namespace

DensityOperator::DensityOperator(CMatrix m) : m_(std::move(m)) {
  if (!m_.is_square() || m_.rows() == 0)
    throw Error(Errc::InvalidState, "density operator must be a non-empty square matrix");
  if (!m_.is_hermitian(1e-9)) throw Error(Errc::InvalidState, "density operator not Hermitian");
  const double tr = m_.trace().real();
  if (std::abs(tr - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "trace " << tr << " differs from 1 by more than 1e-9";
    throw Error(Errc::InvalidState, os.str());
  }
  const HermEig eig = herm_eig(m_);
  if (eig.values.front() < -1e-9) {
    std::ostringstream os;
    os << "minimum eigenvalue " << eig.values.front() << " < -1e-9";
    throw Error(Errc::InvalidState, os.str());
  }
}

DensityOperator DensityOperator::unchecked(CMatrix m) {
  return DensityOperator(std::move(m), Unchecked{});
}

DensityOperator from_pure(const PureStateSpec& spec) {
  double norm_sq = 0.0;
  for (const cplx& p : spec.amplitudes) norm_sq += std::norm(p);
  if (spec.amplitudes.empty() || norm_sq == 0.0)
    throw Error(Errc::ZeroVector, "pure state amplitudes are all zero");
  const double scale = 1.0 / std::sqrt(norm_sq);
  const std::size_t d = spec.amplitudes.size();
  CMatrix m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      m(i, j) = (spec.amplitudes[i] * scale) * std::conj(spec.amplitudes[j] * scale);
  // Exact Hermitian, unit trace up to one rounding.
  return DensityOperator(hermitian_part(m));
}

DensityOperator regularize(const DensityOperator& rho, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw Error(Errc::InvalidArgument, "regularization weight must lie in [0, 1]");
  const std::size_t d = rho.dim();
  CMatrix m = rho.matrix();
  m *= (1.0 - eta);
  for (std::size_t i = 0; i < d; ++i) m(i, i) += eta / static_cast<double>(d);
  return DensityOperator(std::move(m));
}

EntropyContext entropy_context(const DensityOperator& rho, double cutoff) {
  const HermEig eig = psd_eig(rho.matrix());
  EntropyContext ctx;
  const std::size_t d = eig.values.size();
  std::vector<double> b(d, 0.0);
  std::vector<double> logs(d, 0.0);
  std::vector<double> s(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    const double w = eig.values[k];
    if (w > cutoff) {
      b[k] = 1.0;
      logs[k] = std::log(w);
      s[k] = -logs[k];
      ctx.entropy += w * s[k];
      ++ctx.rank;
    }
  }
  // An eigenvalue a hair above 1 gives −w ln w ≈ −1e-16.
  ctx.entropy = std::max(ctx.entropy, 0.0);
  ctx.support_projector = reconstruct(eig.vectors, b);
  ctx.log_rho_on_support = reconstruct(eig.vectors, logs);
  ctx.entropy_operator = reconstruct(eig.vectors, s);
  return ctx;
}

CMatrix entropy_operator_shifted(const DensityOperator& rho, double cutoff) {
  const CMatrix projector_range =
      func_on_support(rho.matrix(), [](double) { return 1.0; }, cutoff);
  CMatrix shifted = rho.matrix() + (CMatrix::identity(rho.dim()) - projector_range);
  // ρ + P_ker has its kernel eigenvalues lifted to 1, so ln is taken on every
  // eigenvalue; any cutoff-level residue sits well inside (0, 1].
  CMatrix log_shifted = func_on_support(hermitian_part(shifted),
                                        [](double w) { return std::log(w); }, 0.0);
  return -log_shifted;
}

CMatrix abs_operator(const CMatrix& rho) {
  return func_on_support(hermitian_part(rho.adjoint() * rho),
                         [](double w) { return std::sqrt(w); }, 0.0);
}

double expectation(const DensityOperator& rho, const CMatrix& f) {
  require_dims(rho, f, "expectation");
  return trace_product(rho.matrix(), f).real();
}

double weighted_inner(const DensityOperator& rho, const CMatrix& f, const CMatrix& g) {
  require_dims(rho, f, "weighted_inner");
  require_dims(rho, g, "weighted_inner");
  // ½ Tr(ρ(FG + GF)) = Re Tr(ρ F G) for Hermitian ρ, F, G.
  const cplx a = trace_product(rho.matrix(), f * g);
  const cplx b = trace_product(rho.matrix(), g * f);
  return 0.5 * (a + b).real();
}

double covariance(const DensityOperator& rho, const CMatrix& f, const CMatrix& g) {
  return weighted_inner(rho, f, g) - expectation(rho, f) * expectation(rho, g);
}

std::vector<double> populations(const DensityOperator& rho) {
  std::vector<double> p(rho.dim());
  for (std::size_t i = 0; i < rho.dim(); ++i) p[i] = rho.matrix()(i, i).real();
  return p;
}

double hs_distance(const DensityOperator& a, const DensityOperator& b) {
  if (a.dim() != b.dim())
    throw Error(Errc::DimensionMismatch, "hs_distance: state dimensions differ");
  return (a.matrix() - b.matrix()).frobenius_norm();
}

}  // namespace mpemba
