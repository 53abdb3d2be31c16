#pragma once

#include "turnpike/ensemble.hpp"

namespace turnpike {

// min 1/2 (|u|^2 + |E[Cx] - z|^2) subject to A(w)x(w) = B(w)u, solved in
// closed form through M = E[C A^{-1} B].
struct StationarySolution {
    Vector u_s;                 // dim m
    std::vector<Vector> x_s;    // per sample, dim n
    std::vector<Vector> phi_s;  // per sample, dim n
    double cost = 0.0;
    Matrix M;                   // p x m composite map
};

/// Requires every A_i invertible (pivot test); throws SingularSample(i)
/// otherwise. u_s solves (I + M^T M)u = M^T z; x_s,i = A_i^{-1} B_i u_s;
/// phi_s,i = A_i^{-T} C_i^T (E[Cx_s] - z).
StationarySolution solve_stationary(const Ensemble& ens, const Vector& z);

/// |u_s + E[B^T phi_s]|; algebraically zero via the normal equations.
double consistency_residual(const StationarySolution& sol, const Ensemble& ens);

} // namespace turnpike
