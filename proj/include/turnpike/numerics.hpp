#pragma once

#include <Eigen/Dense>

#include "turnpike/errors.hpp"

namespace turnpike {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Solves Ax = b by partially pivoted LU.
/// Throws SingularMatrix when a pivot magnitude falls below 1e-14 * max|A_ij|.
Vector lu_solve(const Matrix& A, const Vector& b);

struct MinEigPair {
    double value;
    Vector vector; // unit eigenvector for the smallest eigenvalue
};

/// Smallest eigenvalue and eigenvector of a symmetric matrix.
/// The input must satisfy max|S - S^T| <= 1e-10 * max|S| (throws NotSymmetric
/// otherwise); it is symmetrized internally before the solve.
MinEigPair sym_eig_min(const Matrix& S);

/// e^{-tA} by Pade(6,6) with scaling and squaring. Test oracle for the
/// time integrators; the production code never steps with it.
Matrix mat_exp(const Matrix& A, double t);

} // namespace turnpike
