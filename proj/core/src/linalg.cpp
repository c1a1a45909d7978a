#include "spectra/linalg.hpp"

#include <lapacke.h>

#include <string>

#include "spectra/errors.hpp"
#include "spectra/numeric.hpp"

namespace spectra {

bool exactly_symmetric(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = j + 1; i < a.rows(); ++i)
      if (a(i, j) != a(j, i)) return false;
  return true;
}

SymmetricEigen eigensolve_symmetric(const Eigen::MatrixXd& a, double tol,
                                    const Eigen::SparseMatrix<double>* same) {
  if (!(tol > 0)) fail(ErrorKind::Parameter, "eigensolver tolerance must be positive");
  if (!exactly_symmetric(a)) fail(ErrorKind::Contract, "eigensolve_symmetric needs an exactly symmetric matrix");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = a;
  if (n == 0) {
    out.residuals.resize(0);
    return out;
  }
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n, out.values.data());
  if (info != 0)
    fail(ErrorKind::Solver, "dsyevd failed to converge (info = " + std::to_string(info) + ", n = " + std::to_string(n) + ")");

  for (lapack_int j = 0; j < n; ++j) {
    Eigen::Index imax = 0;
    out.vectors.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.vectors(imax, j) < 0) out.vectors.col(j) *= -1;
  }
  out.norm = std::max(std::abs(out.values(0)), std::abs(out.values(n - 1)));
  Eigen::MatrixXd r = same ? Eigen::MatrixXd(*same * out.vectors) : Eigen::MatrixXd(a * out.vectors);
  r -= out.vectors * out.values.asDiagonal();
  out.residuals = r.colwise().norm().transpose();
  double limit = tol * out.norm;
  for (lapack_int j = 0; j < n; ++j)
    if (!(out.residuals(j) <= limit))
      fail(ErrorKind::Solver, "eigenpair " + std::to_string(j) + " residual " + format_double(out.residuals(j)) +
                                  " exceeds " + format_double(limit));
  return out;
}

}  // namespace spectra
