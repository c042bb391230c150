#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mpemba/matcore.hpp"

namespace mpemba {

namespace {

using EMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using ERowMap =
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

EMat to_eigen(const CMatrix& a) { return ERowMap(a.data().data(), a.rows(), a.cols()); }

CMatrix from_eigen(const EMat& m) {
  CMatrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

constexpr double kClusterTol = 1e-9;
constexpr double kMaxPairingCondition = 1e8;

// Descending real part; real parts within 1e-12 (relative) count as tied and
// are ordered by descending imaginary part.
bool before(cplx a, cplx b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  if (std::abs(a.real() - b.real()) > 1e-12 * scale) return a.real() > b.real();
  return a.imag() > b.imag();
}

}  // namespace

HermEig herm_eig(const CMatrix& a) {
  if (!a.is_square()) throw Error(Errc::DimensionMismatch, "herm_eig needs a square matrix");
  if (!a.is_hermitian(1e-9))
    throw Error(Errc::NotHermitian, "‖A − A†‖_F exceeds 1e-9·‖A‖_F");
  Eigen::SelfAdjointEigenSolver<EMat> solver(to_eigen(a));
  if (solver.info() != Eigen::Success)
    throw Error(Errc::NoConvergence, "Hermitian eigensolver did not converge");
  HermEig out;
  const auto& w = solver.eigenvalues();
  out.values.assign(w.data(), w.data() + w.size());
  out.vectors = from_eigen(solver.eigenvectors());
  return out;
}

CMatrix reconstruct(const CMatrix& vectors, std::span<const double> w) {
  const std::size_t n = vectors.rows();
  if (vectors.cols() != w.size())
    throw Error(Errc::DimensionMismatch, "reconstruct: eigenvalue count mismatch");
  CMatrix scaled(n, w.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < w.size(); ++k) scaled(i, k) = vectors(i, k) * w[k];
  CMatrix out;
  multiply_into(scaled, vectors.adjoint(), out);
  return out;
}

HermEig psd_eig(const CMatrix& a) {
  HermEig eig = herm_eig(a);
  if (!eig.values.empty() && eig.values.front() < -1e-9)
    throw Error(Errc::NegativeEigenvalue,
                "minimum eigenvalue " + std::to_string(eig.values.front()) + " < -1e-9");
  return eig;
}

GenEig gen_eig(const CMatrix& a) {
  if (!a.is_square()) throw Error(Errc::DimensionMismatch, "gen_eig needs a square matrix");
  const std::size_t n = a.rows();
  const EMat m = to_eigen(a);

  Eigen::ComplexEigenSolver<EMat> right_solver(m);
  Eigen::ComplexEigenSolver<EMat> left_solver(m.adjoint());
  if (right_solver.info() != Eigen::Success || left_solver.info() != Eigen::Success)
    throw Error(Errc::NoConvergence, "complex eigensolver did not converge");

  const auto& lam = right_solver.eigenvalues();
  const auto& mu = left_solver.eigenvalues();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Insertion sort: the tolerance-based comparator is not a strict weak order.
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = i; j > 0 && before(lam(order[j]), lam(order[j - 1])); --j)
      std::swap(order[j], order[j - 1]);

  GenEig out;
  out.values.resize(n);
  EMat right(n, n);
  EMat left(n, n);
  std::vector<bool> used(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    out.values[k] = lam(i);
    right.col(k) = right_solver.eigenvectors().col(i).normalized();
    // Adjoint eigenvalues are conj(λ); take the closest unused one.
    std::size_t best = n;
    double best_dist = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double dist = std::abs(std::conj(mu(j)) - lam(i));
      if (best == n || dist < best_dist) {
        best = j;
        best_dist = dist;
      }
    }
    used[best] = true;
    left.col(k) = left_solver.eigenvectors().col(best).normalized();
  }

  // Biorthonormalize blockwise over clusters of (near-)equal eigenvalues.
  out.biorthonormal = true;
  out.pairing_condition = 1.0;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n) {
      bool close = false;
      for (std::size_t p = start; p < end; ++p)
        if (std::abs(out.values[end] - out.values[p]) <= kClusterTol) close = true;
      if (!close) break;
      ++end;
    }
    const Eigen::Index len = static_cast<Eigen::Index>(end - start);
    const EMat yb = left.middleCols(start, len);
    const EMat rb = right.middleCols(start, len);
    const EMat gram = yb.adjoint() * rb;
    // Columns are unit vectors, so 1/σ_min of the block overlap is the
    // (block) eigenvalue condition number.
    Eigen::JacobiSVD<EMat> svd(gram);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    const double cond = smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
    out.pairing_condition = std::max(out.pairing_condition, cond);
    if (!(cond <= kMaxPairingCondition)) {
      out.biorthonormal = false;
    } else {
      left.middleCols(start, len) = yb * gram.inverse().adjoint();
    }
    start = end;
  }

  out.right = from_eigen(right);
  out.left = from_eigen(left);
  return out;
}

}  // namespace mpemba
