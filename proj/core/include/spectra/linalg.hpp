#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace spectra {

struct SymmetricEigen {
  Eigen::VectorXd values;     // ascending
  Eigen::MatrixXd vectors;    // columns, orthonormal
  Eigen::VectorXd residuals;  // ||A v - lambda v||_2
  double norm = 0;            // ||A||_2 = max |lambda|
};

bool exactly_symmetric(const Eigen::MatrixXd& a);

// Full spectrum of a dense symmetric matrix (LAPACK dsyevd). Each eigenvector
// is signed so that its largest-magnitude entry (first on ties) is positive.
// Throws Contract if a is not exactly symmetric, Solver on non-convergence or
// if some residual exceeds tol * ||A||. When `same` is given it must hold the
// same matrix in sparse form and is used for the residual products.
SymmetricEigen eigensolve_symmetric(const Eigen::MatrixXd& a, double tol = 1e-12,
                                    const Eigen::SparseMatrix<double>* same = nullptr);

}  // namespace spectra
