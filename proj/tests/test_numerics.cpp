#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <cmath>

#include "oracles.hpp"
#include "turnpike/numerics.hpp"

using namespace turnpike;

TEST(LuSolve, Identity) {
    Matrix A = Matrix::Identity(2, 2);
    Vector b(2);
    b << 3, 4;
    const Vector x = lu_solve(A, b);
    EXPECT_DOUBLE_EQ(x[0], 3.0);
    EXPECT_DOUBLE_EQ(x[1], 4.0);
}

TEST(LuSolve, CramerByHand) {
    // det = 2*0.1 + 25 = 25.2, x = (35.5/25.2, -11/25.2)
    Matrix A(2, 2);
    A << 2, -5, 5, 0.1;
    Vector b(2);
    b << 5, 7;
    const Vector x = lu_solve(A, b);
    EXPECT_NEAR(x[0], 35.5 / 25.2, 1e-12);
    EXPECT_NEAR(x[1], -11.0 / 25.2, 1e-12);
}

TEST(LuSolve, SingularThrows) {
    Matrix A(2, 2);
    A << 1, 1, 1, 1;
    Vector b(2);
    b << 1, 2;
    EXPECT_THROW(lu_solve(A, b), SingularMatrix);
    EXPECT_THROW(lu_solve(Matrix::Zero(3, 3), Vector::Zero(3)), SingularMatrix);
}

TEST(LuSolve, ShapeErrors) {
    EXPECT_THROW(lu_solve(Matrix::Zero(2, 3), Vector::Zero(2)), DimensionMismatch);
    EXPECT_THROW(lu_solve(Matrix::Identity(2, 2), Vector::Zero(3)), DimensionMismatch);
}

TEST(LuSolve, ResidualOnWellConditioned) {
    auto eng = oracles::seeded_engine(11);
    int tested = 0;
    while (tested < 200) {
        const int n = 2 + static_cast<int>(oracles::random_vector(eng, 1)[0] * 0 + tested % 7);
        Matrix A = oracles::random_matrix(eng, n, n);
        const Eigen::JacobiSVD<Matrix> svd(A);
        const double cond =
            svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
        if (!(cond <= 1e6)) continue;
        const Vector b = oracles::random_vector(eng, n);
        const Vector x = lu_solve(A, b);
        EXPECT_LE((A * x - b).norm(), 1e-9 * std::max(1e-30, b.norm()));
        EXPECT_LE((A * x - b).norm(), 1e-10 * (A.norm() * x.norm() + b.norm()) + 1e-30);
        ++tested;
    }
}

TEST(SymEigMin, Diagonal) {
    Matrix S = Vector3dToDiag(Vector());
    (void)S;
    Matrix D = Matrix::Zero(3, 3);
    D.diagonal() << 3, 1, 2;
    const MinEigPair eig = sym_eig_min(D);
    EXPECT_NEAR(eig.value, 1.0, 1e-14);
    EXPECT_NEAR(std::abs(eig.vector[1]), 1.0, 1e-12);
}

TEST(SymEigMin, OffDiagonal) {
    Matrix S(2, 2);
    S << 0, 1, 1, 0;
    const MinEigPair eig = sym_eig_min(S);
    EXPECT_NEAR(eig.value, -1.0, 1e-14);
    EXPECT_NEAR(eig.vector.norm(), 1.0, 1e-14);
    EXPECT_LE((S * eig.vector - eig.value * eig.vector).norm(), 1e-12);
}

TEST(SymEigMin, NotSymmetricThrows) {
    Matrix S(2, 2);
    S << 0, 1, 0.5, 0;
    EXPECT_THROW(sym_eig_min(S), NotSymmetric);
}

TEST(SymEigMin, MatchesInertiaBisectionOracle) {
    auto eng = oracles::seeded_engine(5);
    for (int trial = 0; trial < 25; ++trial) {
        Matrix G = oracles::random_matrix(eng, 5, 5);
        Matrix S = 0.5 * (G + G.transpose());
        const MinEigPair eig = sym_eig_min(S);
        const double oracle = oracles::smallest_eigenvalue(S);
        EXPECT_NEAR(eig.value, oracle, 1e-8 * std::max(1.0, S.norm()));
        EXPECT_LE((S * eig.vector - eig.value * eig.vector).norm(), 1e-8 * S.norm());
    }
}

TEST(SymEigMin, RayleighLowerBound) {
    auto eng = oracles::seeded_engine(6);
    Matrix G = oracles::random_matrix(eng, 6, 6);
    Matrix S = 0.5 * (G + G.transpose());
    const MinEigPair eig = sym_eig_min(S);
    for (int trial = 0; trial < 1000; ++trial) {
        Vector v = oracles::random_vector(eng, 6);
        v.normalize();
        EXPECT_GE(v.dot(S * v), eig.value - 1e-8 * S.norm());
    }
}

TEST(MatExp, ZeroMatrix) {
    const Matrix E = mat_exp(Matrix::Zero(3, 3), 1.0);
    EXPECT_LE((E - Matrix::Identity(3, 3)).norm(), 1e-14);
}

TEST(MatExp, Scalar) {
    Matrix A(1, 1);
    A << 1.0;
    const Matrix E = mat_exp(A, 1.0);
    EXPECT_NEAR(E(0, 0), std::exp(-1.0), 1e-12);
}

TEST(MatExp, Rotation) {
    // e^{-tA} with A = [[0,1],[-1,0]] is the rotation by angle t.
    Matrix A(2, 2);
    A << 0, 1, -1, 0;
    for (double theta : {0.3, 1.2, 2.9}) {
        const Matrix E = mat_exp(A, theta);
        Matrix R(2, 2);
        R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
        EXPECT_LE((E - R).norm(), 1e-12);
    }
}

TEST(MatExp, Semigroup) {
    auto eng = oracles::seeded_engine(9);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix A = oracles::random_matrix(eng, 4, 4, 0.5);
        const double s = 0.5 + trial * 0.15;
        const double t = 2.0 - trial * 0.1;
        const Matrix lhs = mat_exp(A, s + t);
        const Matrix rhs = mat_exp(A, s) * mat_exp(A, t);
        EXPECT_LE((lhs - rhs).norm(), 1e-8);
    }
}

TEST(MatExp, LargeNormStillAccurate) {
    Matrix A(2, 2);
    A << 2, -5, 5, 0.1;
    A *= 5.0; // |tA| well above the Pade ball; scaling-squaring must handle it
    const Matrix E = mat_exp(A, 1.0);
    const Matrix E_half = mat_exp(A, 0.5);
    EXPECT_LE((E - E_half * E_half).norm(), 1e-9);
}
