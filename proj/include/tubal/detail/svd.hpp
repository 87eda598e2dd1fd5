#pragma once

// Thin matrix SVD backed by LAPACK's divide-and-conquer drivers, with the
// QR-iteration driver as a fallback when gesdd fails to converge.

#include <complex>
#include <string>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/Dense>

#include "tubal/error.hpp"

namespace tubal::detail {

template <typename Scalar>
struct ThinSvd {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix u;           // m x k
  Eigen::VectorXd s;  // k, nonincreasing
  Matrix v;           // n x k
};

namespace lapack {

inline lapack_int gesdd(char jobz, lapack_int m, lapack_int n, double* a, double* s, double* u,
                        double* vt) {
  return LAPACKE_dgesdd(LAPACK_COL_MAJOR, jobz, m, n, a, m, s, u, m, vt, std::min(m, n));
}
inline lapack_int gesdd(char jobz, lapack_int m, lapack_int n, std::complex<double>* a, double* s,
                        std::complex<double>* u, std::complex<double>* vt) {
  return LAPACKE_zgesdd(LAPACK_COL_MAJOR, jobz, m, n, a, m, s, u, m, vt, std::min(m, n));
}
inline lapack_int gesvd(char job, lapack_int m, lapack_int n, double* a, double* s, double* u,
                        double* vt) {
  std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(1, std::min(m, n))));
  return LAPACKE_dgesvd(LAPACK_COL_MAJOR, job, job, m, n, a, m, s, u, m, vt, std::min(m, n),
                        superb.data());
}
inline lapack_int gesvd(char job, lapack_int m, lapack_int n, std::complex<double>* a, double* s,
                        std::complex<double>* u, std::complex<double>* vt) {
  std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(1, std::min(m, n))));
  return LAPACKE_zgesvd(LAPACK_COL_MAJOR, job, job, m, n, a, m, s, u, m, vt, std::min(m, n),
                        superb.data());
}

}  // namespace lapack

/// Thin SVD a = u * diag(s) * v^H. With `vectors == false` only `s` is filled.
template <typename Derived>
ThinSvd<typename Derived::Scalar> thin_svd(const Eigen::MatrixBase<Derived>& a,
                                           bool vectors = true) {
  using Scalar = typename Derived::Scalar;
  using Matrix = typename ThinSvd<Scalar>::Matrix;
  const auto m = static_cast<lapack_int>(a.rows());
  const auto n = static_cast<lapack_int>(a.cols());
  const auto k = std::min(m, n);

  ThinSvd<Scalar> out;
  out.s.resize(k);
  if (k == 0) {
    out.u = Matrix::Zero(m, 0);
    out.v = Matrix::Zero(n, 0);
    return out;
  }
  Matrix vt;
  if (vectors) {
    out.u.resize(m, k);
    vt.resize(k, n);
  } else {
    out.u.resize(1, 1);
    vt.resize(1, 1);
  }
  const char job = vectors ? 'S' : 'N';

  Matrix work = a;
  lapack_int info = lapack::gesdd(job, m, n, work.data(), out.s.data(), out.u.data(), vt.data());
  if (info > 0) {
    work = a;
    info = lapack::gesvd(job, m, n, work.data(), out.s.data(), out.u.data(), vt.data());
  }
  if (info != 0) {
    throw Error(Errc::numerical_failure,
                "matrix SVD of " + std::to_string(m) + "x" + std::to_string(n) +
                    " slice did not converge (info=" + std::to_string(info) + ")");
  }
  if (vectors) {
    out.v = vt.adjoint();
  } else {
    out.u.resize(0, 0);
  }
  return out;
}

}  // namespace tubal::detail
