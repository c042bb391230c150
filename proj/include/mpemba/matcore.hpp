#pragma once

// Small dense complex matrices and the handful of factorizations the physics
// modules need. Sizes in this project are 3, 4 and 9; nothing here is tuned
// for large n.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "mpemba/error.hpp"

namespace mpemba {

using cplx = std::complex<double>;

// Eigenvalues at or below this are treated as the kernel of a PSD matrix.
inline constexpr double kSupportCutoff = 1e-12;

class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols);
  // Entries given in row-major order; the count must equal rows * cols.
  CMatrix(std::size_t rows, std::size_t cols, std::initializer_list<cplx> row_major);

  static CMatrix identity(std::size_t n);
  static CMatrix diagonal(std::span<const double> d);
  static CMatrix diagonal(std::initializer_list<double> d);
  static CMatrix column(std::span<const cplx> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }

  CMatrix adjoint() const;
  CMatrix transpose() const;
  CMatrix conjugate() const;

  cplx trace() const;
  double frobenius_norm() const;

  CMatrix& operator+=(const CMatrix& other);
  CMatrix& operator-=(const CMatrix& other);
  CMatrix& operator*=(cplx s);
  CMatrix& operator/=(cplx s);

  // this += alpha * x
  CMatrix& axpy(cplx alpha, const CMatrix& x);
  void set_zero();

  // ‖this − other‖_F ≤ eps
  bool approx_equal(const CMatrix& other, double eps) const;
  // ‖A − A†‖_F ≤ rel_tol · ‖A‖_F
  bool is_hermitian(double rel_tol = 1e-9) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a);
CMatrix operator*(cplx s, CMatrix a);
CMatrix operator*(CMatrix a, cplx s);
CMatrix operator*(const CMatrix& a, const CMatrix& b);

// Writes a*b into out (resized if needed). out must not alias a or b.
void multiply_into(const CMatrix& a, const CMatrix& b, CMatrix& out);

// Tr(A B) without forming the product.
cplx trace_product(const CMatrix& a, const CMatrix& b);

// (A + A†) / 2
CMatrix hermitian_part(const CMatrix& a);

CMatrix kron(const CMatrix& a, const CMatrix& b);
// Column stacking: vec(A X B) = (Bᵀ ⊗ A) vec(X).
CMatrix vec(const CMatrix& a);
CMatrix unvec(const CMatrix& v, std::size_t d);
CMatrix comm(const CMatrix& a, const CMatrix& b);
CMatrix acomm(const CMatrix& a, const CMatrix& b);

struct HermEig {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // columns, unitary
};

HermEig herm_eig(const CMatrix& a);

// V diag(w) V†
CMatrix reconstruct(const CMatrix& vectors, std::span<const double> w);

struct GenEig {
  std::vector<cplx> values;  // descending by real part, ties by imaginary part
  CMatrix right;             // columns
  CMatrix left;              // columns y_i with y_i† right_j = δ_ij when biorthonormal
  bool biorthonormal = false;
  // Worst condition number of the blockwise pairing systems.
  double pairing_condition = 1.0;
};

GenEig gen_eig(const CMatrix& a);

// Eigendecomposition of a Hermitian PSD matrix; NegativeEigenvalue when the
// smallest eigenvalue is below −1e-9.
HermEig psd_eig(const CMatrix& a);

// V f(w) V† with f applied to eigenvalues above the cutoff and 0 elsewhere.
template <class F>
CMatrix func_on_support(const HermEig& eig, F&& f, double cutoff = kSupportCutoff) {
  std::vector<double> fw(eig.values.size());
  for (std::size_t i = 0; i < fw.size(); ++i)
    fw[i] = eig.values[i] > cutoff ? static_cast<double>(f(eig.values[i])) : 0.0;
  return reconstruct(eig.vectors, fw);
}

template <class F>
CMatrix func_on_support(const CMatrix& a, F&& f, double cutoff = kSupportCutoff) {
  if (cutoff < 0.0) throw Error(Errc::InvalidArgument, "support cutoff must be >= 0");
  return func_on_support(psd_eig(a), std::forward<F>(f), cutoff);
}

}  // namespace mpemba
