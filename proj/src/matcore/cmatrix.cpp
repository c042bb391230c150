#include <algorithm>
#include <cmath>
#include <string>

#include "mpemba/kernels.hpp"
#include "mpemba/matcore.hpp"

namespace mpemba {

namespace {

void require_same_shape(const CMatrix& a, const CMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(Errc::DimensionMismatch,
                std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
}

}  // namespace

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotHermitian: return "NotHermitian";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::DegeneratePairing: return "DegeneratePairing";
    case Errc::NegativeEigenvalue: return "NegativeEigenvalue";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::InvalidState: return "InvalidState";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::ZeroTau: return "ZeroTau";
    case Errc::ZeroEntropyRate: return "ZeroEntropyRate";
    case Errc::EnergyOutOfRange: return "EnergyOutOfRange";
    case Errc::StepSizeUnderflow: return "StepSizeUnderflow";
    case Errc::PositivityLoss: return "PositivityLoss";
    case Errc::SingularEpsilon: return "SingularEpsilon";
    case Errc::NegativeProduct: return "NegativeProduct";
    case Errc::Infeasible: return "Infeasible";
    case Errc::BudgetExhausted: return "BudgetExhausted";
    case Errc::SimulationFailure: return "SimulationFailure";
    case Errc::Parse: return "Parse";
  }
  return "Unknown";
}

CMatrix::CMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, cplx{0.0, 0.0}) {}

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::initializer_list<cplx> row_major)
    : rows_(rows), cols_(cols), data_(row_major) {
  if (data_.size() != rows * cols)
    throw Error(Errc::DimensionMismatch, "initializer has " + std::to_string(data_.size()) +
                                             " entries, expected " +
                                             std::to_string(rows * cols));
}

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::diagonal(std::span<const double> d) {
  CMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

CMatrix CMatrix::diagonal(std::initializer_list<double> d) {
  return diagonal(std::span<const double>(d.begin(), d.size()));
}

CMatrix CMatrix::column(std::span<const cplx> v) {
  CMatrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

CMatrix CMatrix::adjoint() const {
  CMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
  return out;
}

CMatrix CMatrix::transpose() const {
  CMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

CMatrix CMatrix::conjugate() const {
  CMatrix out = *this;
  for (auto& z : out.data_) z = std::conj(z);
  return out;
}

cplx CMatrix::trace() const {
  if (!is_square()) throw Error(Errc::DimensionMismatch, "trace of a non-square matrix");
  cplx t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

double CMatrix::frobenius_norm() const {
  return std::sqrt(kernels::active().norm_sq(data_.size(), data_.data()));
}

CMatrix& CMatrix::operator+=(const CMatrix& other) {
  require_same_shape(*this, other, "operator+=");
  kernels::active().axpy(data_.size(), 1.0, other.data_.data(), data_.data());
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& other) {
  require_same_shape(*this, other, "operator-=");
  kernels::active().axpy(data_.size(), -1.0, other.data_.data(), data_.data());
  return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
  for (auto& z : data_) z = {z.real() * s.real() - z.imag() * s.imag(),
                             z.real() * s.imag() + z.imag() * s.real()};
  return *this;
}

CMatrix& CMatrix::operator/=(cplx s) {
  if (s == cplx{0.0, 0.0}) throw Error(Errc::InvalidArgument, "division by zero");
  return *this *= (1.0 / s);
}

CMatrix& CMatrix::axpy(cplx alpha, const CMatrix& x) {
  require_same_shape(*this, x, "axpy");
  kernels::active().axpy(data_.size(), alpha, x.data_.data(), data_.data());
  return *this;
}

void CMatrix::set_zero() { std::fill(data_.begin(), data_.end(), cplx{0.0, 0.0}); }

bool CMatrix::approx_equal(const CMatrix& other, double eps) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) return false;
  double acc = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) acc += std::norm(data_[i] - other.data_[i]);
  return std::sqrt(acc) <= eps;
}

bool CMatrix::is_hermitian(double rel_tol) const {
  if (!is_square()) return false;
  double diff = 0.0;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      diff += std::norm((*this)(i, j) - std::conj((*this)(j, i)));
  return std::sqrt(diff) <= rel_tol * frobenius_norm();
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator-(CMatrix a) { return a *= -1.0; }
CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
CMatrix operator*(CMatrix a, cplx s) { return a *= s; }

void multiply_into(const CMatrix& a, const CMatrix& b, CMatrix& out) {
  if (a.cols() != b.rows())
    throw Error(Errc::DimensionMismatch, "matrix product: inner dimensions " +
                                             std::to_string(a.cols()) + " and " +
                                             std::to_string(b.rows()));
  if (out.rows() != a.rows() || out.cols() != b.cols()) out = CMatrix(a.rows(), b.cols());
  kernels::active().gemm(a.rows(), a.cols(), b.cols(), a.data().data(), b.data().data(),
                         out.data().data());
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows(), b.cols());
  multiply_into(a, b, out);
  return out;
}

cplx trace_product(const CMatrix& a, const CMatrix& b) {
  if (!a.is_square()) throw Error(Errc::DimensionMismatch, "trace_product needs square input");
  require_same_shape(a, b, "trace_product");
  return kernels::active().trace_product(a.rows(), a.data().data(), b.data().data());
}

CMatrix hermitian_part(const CMatrix& a) {
  if (!a.is_square()) throw Error(Errc::DimensionMismatch, "hermitian_part needs square input");
  CMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      out(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
  return out;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx s = a(i, j);
      if (s == cplx{0.0, 0.0}) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = s * b(k, l);
    }
  return out;
}

CMatrix vec(const CMatrix& a) {
  CMatrix v(a.rows() * a.cols(), 1);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) v(i + j * a.rows(), 0) = a(i, j);
  return v;
}

CMatrix unvec(const CMatrix& v, std::size_t d) {
  if (v.cols() != 1 || v.rows() != d * d)
    throw Error(Errc::DimensionMismatch, "unvec expects a " + std::to_string(d * d) +
                                             "x1 column, got " + std::to_string(v.rows()) +
                                             "x" + std::to_string(v.cols()));
  CMatrix a(d, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i) a(i, j) = v(i + j * d, 0);
  return a;
}

CMatrix comm(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

CMatrix acomm(const CMatrix& a, const CMatrix& b) { return a * b + b * a; }

}  // namespace mpemba
