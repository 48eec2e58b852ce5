#pragma once

#include <algorithm>
#include <cmath>

#include "lyap/matrix.hpp"
#include "lyap/rng.hpp"

namespace testing {

inline lyap::SquareMatrix random_matrix(lyap::Rng& rng, std::size_t d, double lo = -1.0, double hi = 1.0) {
    lyap::SquareMatrix m(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double max_abs_diff(const lyap::SquareMatrix& a, const lyap::SquareMatrix& b) {
    return (a - b).max_abs();
}

}  // namespace testing
