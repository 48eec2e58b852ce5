#pragma once

#include <cstddef>

#include "lyap/matrix.hpp"

namespace lyap {

/// M = U * diag(sigmas) * V^T with sigmas sorted descending.
struct SvdResult {
    SquareMatrix u;
    Vector sigmas;
    SquareMatrix v;
};

/// One-sided (Hestenes) Jacobi SVD. Small singular values are computed with
/// high relative accuracy when the matrix is a well-conditioned matrix times a
/// diagonal scaling. Throws NumericalError if the sweep cap is reached.
SvdResult svd(const SquareMatrix& m);

Vector singular_values(const SquareMatrix& m);
double spectral_norm(const SquareMatrix& m);

/// Moduli |lambda_1| >= ... >= |lambda_d| of the eigenvalues of m.
///
/// Balancing, Householder reduction to Hessenberg form, then Francis
/// double-shift QR with a total cap of 10*d^2 iterations. Complex conjugate
/// pairs contribute two equal moduli. Ties keep encounter order.
Vector eigen_moduli(const SquareMatrix& m);

/// Householder QR with nonnegative diagonal in R.
struct QrResult {
    SquareMatrix q;
    SquareMatrix r;
};
QrResult qr(const SquareMatrix& m);

/// LU factorization with partial pivoting, P*M = L*U packed into one matrix.
struct LuResult {
    SquareMatrix lu;
    std::vector<std::size_t> perm;
    int sign = 1;
    bool singular = false;
};
LuResult lu(const SquareMatrix& m);

double determinant(const SquareMatrix& m);
/// Throws DomainError("... not invertible") when a pivot vanishes.
SquareMatrix inverse(const SquareMatrix& m);

/// max(log+ |M|, log+ |M^-1|) in the spectral norm; throws DomainError for
/// numerically singular input.
double ell(const SquareMatrix& m);

/// True when sigma_1 / sigma_d <= 1 + tol, i.e. M / |M| is orthogonal.
bool is_scaled_orthogonal(const SquareMatrix& m, double tol = 1e-6);

}  // namespace lyap
