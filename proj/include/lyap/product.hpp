#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lyap/matrix.hpp"
#include "lyap/projective.hpp"

namespace lyap {

/// Log-spectrum with the number of leading entries that are numerically
/// trustworthy.
struct LogSpectrum {
    Vector values;
    std::size_t trusted = 0;
};

enum class SvMethod { direct_svd, qr_accumulated };

struct TopDirections {
    Direction u1;  // first left singular direction
    Direction v1;  // first right singular direction
};

struct SpectrumSnapshot {
    std::size_t n = 0;
    Vector log_sigmas;        // accumulator route, descending
    Vector log_eigen_moduli;  // exterior-lift route, max_p entries
    std::size_t trusted_p = 0;  // leading p trusted on both routes
    std::optional<Direction> u1;
    std::optional<Direction> v1;
    std::string direction_error;
    double log_abs_trace = 0.0;

    friend bool operator==(const SpectrumSnapshot& a, const SpectrumSnapshot& b);
};

/// Threshold on sigma_k(b) / sigma_1(b) below which direct decompositions of
/// the normalized product stop being trusted.
inline constexpr double kTrustFloor = 1e-12;

/// Overflow-free accumulation of S_n = Y_n ... Y_1.
///
/// Two representations are maintained side by side:
///  - S_n = exp(log_scale) * b with |b| = 1 in the spectral norm;
///  - S_n = Q * diag(exp(qr_logdiag)) * T, Q orthogonal and T unit upper
///    triangular, updated by a Householder QR of Y * Q every step.
/// For p in [2, max_p] a lifted product of the p-th exterior powers of the
/// factors is kept in normalized form; its top eigenvalue carries
/// |lambda_1 ... lambda_p| of S_n.
///
/// Single writer. Const member functions may run concurrently between pushes.
class ScaledProduct {
public:
    /// Throws DomainError if a lift exceeds the exterior cap.
    explicit ScaledProduct(std::size_t dim, std::size_t max_p = 1, bool track_qr = true);

    /// Throws DomainError if y is singular or of the wrong dimension.
    void push(const SquareMatrix& y);

    std::size_t steps() const noexcept { return steps_; }
    std::size_t dim() const noexcept { return b_.dim(); }
    std::size_t max_p() const noexcept { return max_p_; }

    const SquareMatrix& normalized() const noexcept { return b_; }
    double log_scale() const noexcept { return log_scale_; }
    const SquareMatrix& qr_q() const noexcept { return q_; }
    const Vector& qr_logdiag() const noexcept { return logdiag_; }
    const SquareMatrix& qr_tri() const noexcept { return tri_; }
    /// Sum of log|det Y_i| over all pushed factors.
    double log_abs_det_sum() const noexcept { return log_det_sum_; }
    /// Set when the triangular factor grew beyond 1e100 (factors whose
    /// accumulated diagonal never orders itself).
    bool accumulator_degraded() const noexcept { return degraded_; }

    LogSpectrum log_singular_values(SvMethod method) const;

    /// Sums log|lambda_1| + ... + log|lambda_p| for p = 1..max_p via lifts,
    /// differenced into individual moduli. Throws DomainError if max_p
    /// exceeds the lifts built at construction.
    LogSpectrum log_eigen_moduli(std::size_t max_p) const;
    /// log_scale + log eigen_moduli(b); trusted while sigma_k(b) > kTrustFloor.
    LogSpectrum log_eigen_moduli_direct() const;

    /// log |wedge^p S_n| read from the p-th lift (p = 1 reads the base).
    double lift_log_norm(std::size_t p) const;

    /// Throws NumericalError("top direction ill-defined") when
    /// sigma_1(b) <= sigma_2(b) (1 + 1e-9).
    TopDirections top_directions() const;

    double log_abs_trace() const;

    SpectrumSnapshot snapshot(std::size_t max_p) const;

private:
    std::size_t steps_ = 0;
    std::size_t max_p_ = 1;
    bool track_qr_ = true;
    SquareMatrix b_;
    double log_scale_ = 0.0;
    SquareMatrix q_;
    Vector logdiag_;
    SquareMatrix tri_;
    double log_det_sum_ = 0.0;
    bool degraded_ = false;
    std::vector<ScaledProduct> lifts_;  // lifts_[p - 2] holds the p-th exterior power product
};

/// Default checkpoint stride ceil(n / 40).
std::size_t default_checkpoint_stride(std::size_t n_max);

/// Steps stride, 2*stride, ... plus n_max itself.
std::vector<std::size_t> checkpoint_schedule(std::size_t n_max, std::size_t stride);

}  // namespace lyap
