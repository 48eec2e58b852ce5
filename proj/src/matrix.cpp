#include "lyap/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lyap/error.hpp"

namespace lyap {

namespace {

void check_dim(std::size_t dim) {
    if (dim == 0 || dim > SquareMatrix::kMaxDim) {
        throw DomainError("matrix dimension " + std::to_string(dim) + " outside [1, " +
                          std::to_string(SquareMatrix::kMaxDim) + "]");
    }
}

void check_same_dim(const SquareMatrix& a, const SquareMatrix& b) {
    if (a.dim() != b.dim()) {
        throw DomainError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
    }
}

}  // namespace

SquareMatrix::SquareMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) { check_dim(dim); }

SquareMatrix::SquareMatrix(std::size_t dim, std::vector<double> row_major)
    : dim_(dim), data_(std::move(row_major)) {
    check_dim(dim);
    if (data_.size() != dim * dim) {
        throw DomainError("expected " + std::to_string(dim * dim) + " entries, got " +
                          std::to_string(data_.size()));
    }
    if (!all_finite()) throw DomainError("matrix entries must be finite");
}

SquareMatrix SquareMatrix::identity(std::size_t dim) {
    SquareMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

SquareMatrix SquareMatrix::diagonal(std::span<const double> diag) {
    SquareMatrix m(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    if (!m.all_finite()) throw DomainError("matrix entries must be finite");
    return m;
}

SquareMatrix SquareMatrix::diagonal(std::initializer_list<double> diag) {
    return diagonal(std::span<const double>(diag.begin(), diag.size()));
}

SquareMatrix SquareMatrix::rotation(double theta) { return plane_rotation(2, 0, 1, theta); }

SquareMatrix SquareMatrix::plane_rotation(std::size_t dim, std::size_t i, std::size_t j, double theta) {
    if (i >= dim || j >= dim || i == j) throw DomainError("invalid rotation plane");
    SquareMatrix m = identity(dim);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    m(i, i) = c;
    m(i, j) = -s;
    m(j, i) = s;
    m(j, j) = c;
    return m;
}

Vector SquareMatrix::column(std::size_t j) const {
    Vector out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = (*this)(i, j);
    return out;
}

Vector SquareMatrix::row(std::size_t i) const {
    return Vector(data_.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                  data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
}

SquareMatrix SquareMatrix::transpose() const {
    SquareMatrix t(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double SquareMatrix::trace() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += (*this)(i, i);
    return s;
}

double SquareMatrix::frobenius_norm() const noexcept { return norm2(data_); }

double SquareMatrix::max_abs() const noexcept {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
}

bool SquareMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

SquareMatrix& SquareMatrix::operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
}

SquareMatrix& SquareMatrix::operator+=(const SquareMatrix& other) {
    check_same_dim(*this, other);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
}

SquareMatrix& SquareMatrix::operator-=(const SquareMatrix& other) {
    check_same_dim(*this, other);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
    return *this;
}

SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
    check_same_dim(a, b);
    const std::size_t n = a.dim();
    SquareMatrix c(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Vector operator*(const SquareMatrix& a, std::span<const double> x) {
    if (x.size() != a.dim()) throw DomainError("vector length does not match matrix dimension");
    Vector y(a.dim(), 0.0);
    for (std::size_t i = 0; i < a.dim(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.dim(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

std::string SquareMatrix::to_string(int precision) const {
    std::ostringstream os;
    os.precision(precision);
    for (std::size_t i = 0; i < dim_; ++i) {
        os << (i == 0 ? "[[" : " [");
        for (std::size_t j = 0; j < dim_; ++j) os << (j ? ", " : "") << (*this)(i, j);
        os << (i + 1 == dim_ ? "]]" : "]\n");
    }
    return os.str();
}

double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(std::span<const double> x) {
    // Scaled accumulation avoids overflow for large entries.
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    if (scale == 0.0 || !std::isfinite(scale)) return scale;
    double s = 0.0;
    for (double v : x) {
        const double t = v / scale;
        s += t * t;
    }
    return scale * std::sqrt(s);
}

Vector normalized(std::span<const double> x) {
    const double n = norm2(x);
    if (!(n > 0.0)) throw DomainError("cannot normalize a zero vector");
    Vector out(x.begin(), x.end());
    for (double& v : out) v /= n;
    return out;
}

Vector basis_vector(std::size_t dim, std::size_t index) {
    if (index >= dim) throw DomainError("basis index out of range");
    Vector e(dim, 0.0);
    e[index] = 1.0;
    return e;
}

}  // namespace lyap
