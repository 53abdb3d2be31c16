#include "turnpike/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace turnpike {

Vector lu_solve(const Matrix& A, const Vector& b) {
    if (A.rows() != A.cols())
        throw DimensionMismatch("lu_solve: matrix is not square");
    if (b.size() != A.rows())
        throw DimensionMismatch("lu_solve: rhs size does not match matrix");

    Eigen::PartialPivLU<Matrix> lu(A);
    const double scale = std::max(A.cwiseAbs().maxCoeff(),
                                  std::numeric_limits<double>::min());
    const double pivot_floor = 1e-14 * scale;
    const Vector pivots = lu.matrixLU().diagonal();
    for (Eigen::Index i = 0; i < pivots.size(); ++i) {
        if (std::abs(pivots[i]) <= pivot_floor)
            throw SingularMatrix("lu_solve: pivot " + std::to_string(i) +
                                 " below threshold; matrix is singular to working precision");
    }
    return lu.solve(b);
}

MinEigPair sym_eig_min(const Matrix& S) {
    if (S.rows() != S.cols())
        throw DimensionMismatch("sym_eig_min: matrix is not square");
    const double scale = S.cwiseAbs().maxCoeff();
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(scale, std::numeric_limits<double>::min()))
        throw NotSymmetric("sym_eig_min: input deviates from symmetry beyond 1e-10 * max|S|");

    const Matrix sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("sym_eig_min: eigensolver failed to converge");
    MinEigPair out;
    out.value = solver.eigenvalues()(0); // ascending order
    out.vector = solver.eigenvectors().col(0);
    return out;
}

Matrix mat_exp(const Matrix& A, double t) {
    if (A.rows() != A.cols())
        throw DimensionMismatch("mat_exp: matrix is not square");
    const Eigen::Index n = A.rows();
    Matrix M = -t * A;

    // Scale so |M/2^s|_inf <= 0.5, apply the (6,6) Pade approximant, square back.
    const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
        M /= std::ldexp(1.0, squarings);
    }

    // c_{k} = c_{k-1} * (q - k + 1) / (k (2q - k + 1)), q = 6
    double coeff = 1.0;
    Matrix power = Matrix::Identity(n, n);
    Matrix numer = Matrix::Identity(n, n);
    Matrix denom = Matrix::Identity(n, n);
    for (int k = 1; k <= 6; ++k) {
        coeff *= static_cast<double>(7 - k) / (k * (13 - k));
        power = power * M;
        numer.noalias() += coeff * power;
        if (k % 2 == 0)
            denom.noalias() += coeff * power;
        else
            denom.noalias() -= coeff * power;
    }

    Matrix result = Eigen::PartialPivLU<Matrix>(denom).solve(numer);
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

} // namespace turnpike
