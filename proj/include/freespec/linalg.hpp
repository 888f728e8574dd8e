#pragma once

// Dense complex matrix kernel and matrix upper half-plane predicates.
//
// Everything here works on Eigen::MatrixXcd. Matrices are small (linearization
// dimensions, a few dozen at most) except for the random-matrix helpers, which
// route through BLAS/LAPACKE when available.

#include <Eigen/Dense>

#include <complex>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#if defined(FREESPEC_USE_BLAS_LAPACKE)
#define LAPACK_COMPLEX_CPP
#include <cblas.h>
#include <lapacke.h>
#endif

namespace freespec {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kImag{0.0, 1.0};

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public LinalgError {
 public:
  explicit SingularMatrixError(double cond)
      : LinalgError("matrix is singular to machine precision (cond estimate " +
                    std::to_string(cond) + ")"),
        cond_estimate(cond) {}
  double cond_estimate;
};

inline bool all_finite(const CMatrix& m) {
  return m.allFinite();
}

inline void require_finite(const CMatrix& m, const char* what) {
  if (!all_finite(m)) throw LinalgError(std::string(what) + ": non-finite entries");
}

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Im b = (b - b*)/(2i), symmetrized so the result is Hermitian to the last ulp.
inline CMatrix imag_part(const CMatrix& b) {
  CMatrix h = (b - b.adjoint()) / Complex(0.0, 2.0);
  return 0.5 * (h + h.adjoint());
}

inline CMatrix real_part(const CMatrix& b) {
  CMatrix h = 0.5 * (b + b.adjoint());
  return 0.5 * (h + h.adjoint());
}

inline bool is_hermitian(const CMatrix& h, double tol = 1e-10) {
  return max_abs(h - h.adjoint()) <= tol * std::max(1.0, max_abs(h));
}

/// Eigenvalues of a Hermitian matrix, ascending. Uses LAPACKE's zheevd for
/// large inputs (random-matrix sizes), Eigen otherwise.
inline RVector eigvals_hermitian(const CMatrix& h) {
#if defined(FREESPEC_USE_BLAS_LAPACKE)
  if (h.rows() >= 128) {
    CMatrix a = h;
    RVector w(a.rows());
    lapack_int n = static_cast<lapack_int>(a.rows());
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n, w.data());
    if (info != 0) throw LinalgError("zheevd failed with info " + std::to_string(info));
    return w;
  }
#endif
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw LinalgError("hermitian eigensolver failed");
  return es.eigenvalues();
}

/// Smallest eigenvalue of a Hermitian matrix. Rejects non-Hermitian input.
inline double min_eig_herm(const CMatrix& h) {
  if (!is_hermitian(h)) throw LinalgError("min_eig_herm: input is not Hermitian");
  CMatrix s = 0.5 * (h + h.adjoint());
  return eigvals_hermitian(s)(0);
}

inline double max_eig_herm(const CMatrix& h) {
  if (!is_hermitian(h)) throw LinalgError("max_eig_herm: input is not Hermitian");
  CMatrix s = 0.5 * (h + h.adjoint());
  RVector w = eigvals_hermitian(s);
  return w(w.size() - 1);
}

struct HalfPlaneCheck {
  bool inside;
  double certified_margin;  // min eigenvalue of Im b
};

/// b in H+(M_N) with margin: min-eig of Im b strictly above `margin`.
inline HalfPlaneCheck in_upper_half_plane(const CMatrix& b, double margin = 0.0) {
  double m = min_eig_herm(imag_part(b));
  return {m > margin, m};
}

/// A point of the matrix upper half-plane together with a certified lower
/// bound on the spectrum of its imaginary part. Margins are absolute.
struct HalfPlanePoint {
  CMatrix m;
  double margin;
};

inline HalfPlanePoint certify_half_plane(const CMatrix& b) {
  require_finite(b, "half-plane point");
  double margin = min_eig_herm(imag_part(b));
  if (!(margin > 0.0))
    throw LinalgError("point is not in the open matrix upper half-plane (margin " +
                      std::to_string(margin) + ")");
  return {b, margin};
}

namespace detail {

inline void check_pivots(const Eigen::PartialPivLU<CMatrix>& lu) {
  RVector d = lu.matrixLU().diagonal().cwiseAbs();
  double dmax = d.maxCoeff();
  double dmin = d.minCoeff();
  if (dmin == 0.0 || dmin < dmax * 1e-300)
    throw SingularMatrixError(dmin == 0.0 ? std::numeric_limits<double>::infinity()
                                          : dmax / dmin);
}

}  // namespace detail

struct InverseReport {
  CMatrix inverse;
  double cond_estimate;  // Frobenius-based, order-of-magnitude only
};

/// LU inverse with partial pivoting. Exactly singular input throws
/// SingularMatrixError; near-singular input goes through invert_with_condition.
inline InverseReport invert_with_condition(const CMatrix& b) {
  if (b.rows() != b.cols()) throw LinalgError("invert: matrix is not square");
  Eigen::PartialPivLU<CMatrix> lu(b);
  detail::check_pivots(lu);
  CMatrix inv = lu.inverse();
  double cond = b.norm() * inv.norm() / static_cast<double>(b.rows());
  return {std::move(inv), cond};
}

inline CMatrix invert(const CMatrix& b) {
  return invert_with_condition(b).inverse;
}

/// Operator (spectral) norm via SVD; intended for small matrices.
inline double op_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

/// Matrix product; large sizes go to BLAS zgemm (random-matrix workloads).
inline CMatrix matmul(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) throw LinalgError("matmul: dimension mismatch");
#if defined(FREESPEC_USE_BLAS_LAPACKE)
  if (a.rows() >= 128 && a.cols() >= 128 && b.cols() >= 128) {
    CMatrix c(a.rows(), b.cols());
    Complex one{1.0, 0.0}, zero{0.0, 0.0};
    cblas_zgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(a.rows()),
                static_cast<int>(b.cols()), static_cast<int>(a.cols()), &one, a.data(),
                static_cast<int>(a.rows()), b.data(), static_cast<int>(b.rows()), &zero,
                c.data(), static_cast<int>(c.rows()));
    return c;
  }
#endif
  return a * b;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace freespec
