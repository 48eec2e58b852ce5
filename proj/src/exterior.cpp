#include "lyap/exterior.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "lyap/error.hpp"

namespace lyap {

namespace {

constexpr std::size_t kCofactorMaxOrder = 4;

double det_small(const std::array<double, 16>& a, std::size_t p) {
    auto at = [&](std::size_t i, std::size_t j) { return a[i * 4 + j]; };
    switch (p) {
        case 1:
            return at(0, 0);
        case 2:
            return at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
        case 3:
            return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
                   at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
                   at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
        default: {
            // Laplace expansion along the first two rows.
            const double s01 = at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
            const double s02 = at(0, 0) * at(1, 2) - at(0, 2) * at(1, 0);
            const double s03 = at(0, 0) * at(1, 3) - at(0, 3) * at(1, 0);
            const double s12 = at(0, 1) * at(1, 2) - at(0, 2) * at(1, 1);
            const double s13 = at(0, 1) * at(1, 3) - at(0, 3) * at(1, 1);
            const double s23 = at(0, 2) * at(1, 3) - at(0, 3) * at(1, 2);
            const double c01 = at(2, 0) * at(3, 1) - at(2, 1) * at(3, 0);
            const double c02 = at(2, 0) * at(3, 2) - at(2, 2) * at(3, 0);
            const double c03 = at(2, 0) * at(3, 3) - at(2, 3) * at(3, 0);
            const double c12 = at(2, 1) * at(3, 2) - at(2, 2) * at(3, 1);
            const double c13 = at(2, 1) * at(3, 3) - at(2, 3) * at(3, 1);
            const double c23 = at(2, 2) * at(3, 3) - at(2, 3) * at(3, 2);
            return s01 * c23 - s02 * c13 + s03 * c12 + s12 * c03 - s13 * c02 + s23 * c01;
        }
    }
}

double det_lu(std::vector<double> a, std::size_t p) {
    double det = 1.0;
    for (std::size_t k = 0; k < p; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < p; ++i)
            if (std::abs(a[i * p + k]) > std::abs(a[piv * p + k])) piv = i;
        if (a[piv * p + k] == 0.0) return 0.0;
        if (piv != k) {
            for (std::size_t j = 0; j < p; ++j) std::swap(a[k * p + j], a[piv * p + j]);
            det = -det;
        }
        det *= a[k * p + k];
        for (std::size_t i = k + 1; i < p; ++i) {
            const double f = a[i * p + k] / a[k * p + k];
            for (std::size_t j = k + 1; j < p; ++j) a[i * p + j] -= f * a[k * p + j];
        }
    }
    return det;
}

}  // namespace

std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

std::vector<SubsetIndex> subset_enumeration(std::size_t d, std::size_t p) {
    if (p < 1 || p > d) {
        throw DomainError("subset size " + std::to_string(p) + " outside [1, " + std::to_string(d) + "]");
    }
    std::vector<SubsetIndex> out;
    out.reserve(binomial(d, p));
    std::vector<std::size_t> cur(p);
    for (std::size_t i = 0; i < p; ++i) cur[i] = i + 1;
    while (true) {
        out.push_back({cur});
        // Advance to the next subset in dictionary order.
        std::size_t i = p;
        while (i > 0 && cur[i - 1] == d - p + i) --i;
        if (i == 0) break;
        ++cur[i - 1];
        for (std::size_t j = i; j < p; ++j) cur[j] = cur[j - 1] + 1;
    }
    return out;
}

double minor(const SquareMatrix& m, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
    const std::size_t p = rows.size();
    if (cols.size() != p || p == 0) throw DomainError("minor: row/column index sets must be nonempty and equal in size");
    if (p <= kCofactorMaxOrder) {
        std::array<double, 16> a{};
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) a[i * 4 + j] = m(rows[i], cols[j]);
        return det_small(a, p);
    }
    std::vector<double> a(p * p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) a[i * p + j] = m(rows[i], cols[j]);
    return det_lu(std::move(a), p);
}

ExteriorMatrix exterior_power(const SquareMatrix& m, std::size_t p) {
    const std::size_t d = m.dim();
    if (p < 1 || p > d) {
        throw DomainError("exterior power p = " + std::to_string(p) + " outside [1, " + std::to_string(d) + "]");
    }
    const std::size_t size = binomial(d, p);
    if (size > kExteriorCap) {
        throw DomainError("exterior power C(" + std::to_string(d) + ", " + std::to_string(p) + ") = " +
                          std::to_string(size) + " exceeds the cap of " + std::to_string(kExteriorCap));
    }
    if (p == 1) return {d, 1, m};

    const auto subsets = subset_enumeration(d, p);
    std::vector<std::vector<std::size_t>> zero_based(size);
    for (std::size_t k = 0; k < size; ++k) {
        zero_based[k] = subsets[k].elements;
        for (auto& e : zero_based[k]) --e;
    }
    SquareMatrix out(size);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) out(i, j) = minor(m, zero_based[i], zero_based[j]);
    return {d, p, std::move(out)};
}

}  // namespace lyap
