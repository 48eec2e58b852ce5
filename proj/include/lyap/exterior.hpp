#pragma once

#include <cstddef>
#include <vector>

#include "lyap/matrix.hpp"

namespace lyap {

/// Strictly increasing p-subset of {1, ..., d}, stored one-based.
struct SubsetIndex {
    std::vector<std::size_t> elements;
    friend bool operator==(const SubsetIndex&, const SubsetIndex&) = default;
};

/// Largest compound matrix dimension accepted by exterior_power.
inline constexpr std::size_t kExteriorCap = 70;

std::size_t binomial(std::size_t n, std::size_t k);

/// All C(d, p) subsets in dictionary order.
std::vector<SubsetIndex> subset_enumeration(std::size_t d, std::size_t p);

/// p-th compound matrix of m: entry (I, J) is the minor on rows I, columns J,
/// rows and columns ordered as subset_enumeration(d, p).
struct ExteriorMatrix {
    std::size_t base_dim = 0;
    std::size_t power = 0;
    SquareMatrix matrix;
};

/// Minors use cofactor expansion for p <= 4 and pivoted LU for p >= 5.
/// Throws DomainError if p is outside [1, d] or C(d, p) exceeds kExteriorCap.
ExteriorMatrix exterior_power(const SquareMatrix& m, std::size_t p);

/// Determinant of the submatrix on the given zero-based rows and columns.
double minor(const SquareMatrix& m, std::span<const std::size_t> rows, std::span<const std::size_t> cols);

}  // namespace lyap
