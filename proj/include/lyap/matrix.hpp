#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lyap {

using Vector = std::vector<double>;

/// Dense square matrix of doubles, stored row-major.
///
/// Dimensions range over [1, kMaxDim]: ensemble factors are small (d <= 12)
/// but exterior lifts reach C(8,4) = 70 and the top lift is 1x1.
class SquareMatrix {
public:
    static constexpr std::size_t kMaxDim = 70;

    SquareMatrix() = default;
    /// Zero matrix.
    explicit SquareMatrix(std::size_t dim);
    /// Takes dim*dim finite entries in row-major order.
    SquareMatrix(std::size_t dim, std::vector<double> row_major);

    static SquareMatrix identity(std::size_t dim);
    static SquareMatrix diagonal(std::span<const double> diag);
    static SquareMatrix diagonal(std::initializer_list<double> diag);
    /// 2x2 counter-clockwise rotation.
    static SquareMatrix rotation(double theta);
    /// Rotation by theta in the (i, j) coordinate plane of R^dim.
    static SquareMatrix plane_rotation(std::size_t dim, std::size_t i, std::size_t j, double theta);

    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return dim_ == 0; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * dim_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * dim_ + j]; }

    std::span<const double> row_major() const noexcept { return data_; }
    Vector column(std::size_t j) const;
    Vector row(std::size_t i) const;

    SquareMatrix transpose() const;
    double trace() const noexcept;
    double frobenius_norm() const noexcept;
    double max_abs() const noexcept;
    bool all_finite() const noexcept;

    SquareMatrix& operator*=(double s) noexcept;
    SquareMatrix& operator+=(const SquareMatrix& other);
    SquareMatrix& operator-=(const SquareMatrix& other);

    friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b);
    friend Vector operator*(const SquareMatrix& a, std::span<const double> x);
    friend SquareMatrix operator*(double s, SquareMatrix a) { return a *= s; }
    friend SquareMatrix operator+(SquareMatrix a, const SquareMatrix& b) { return a += b; }
    friend SquareMatrix operator-(SquareMatrix a, const SquareMatrix& b) { return a -= b; }
    friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

    std::string to_string(int precision = 6) const;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
/// Returns x / |x|; throws DomainError on a zero vector.
Vector normalized(std::span<const double> x);
Vector basis_vector(std::size_t dim, std::size_t index);

}  // namespace lyap
