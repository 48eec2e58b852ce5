#include "lyap/product.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lyap/error.hpp"
#include "lyap/exterior.hpp"
#include "lyap/linalg.hpp"
#include "lyap/log.hpp"

namespace lyap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTriangularGrowthLimit = 1e100;

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// Eigenvalue moduli, retrying once under a fixed orthogonal similarity if the
// QR iteration hits its cap.
Vector robust_eigen_moduli(const SquareMatrix& m) {
    try {
        return eigen_moduli(m);
    } catch (const NumericalError& e) {
        log::warn(std::string(e.what()) + "; retrying under an orthogonal similarity transform");
        const std::size_t n = m.dim();
        SquareMatrix k = SquareMatrix::identity(n);
        for (std::size_t i = 0; i + 1 < n; ++i) k = SquareMatrix::plane_rotation(n, i, i + 1, 0.37 + 0.11 * double(i)) * k;
        return eigen_moduli(k * m * k.transpose());
    }
}

}  // namespace

bool operator==(const SpectrumSnapshot& a, const SpectrumSnapshot& b) {
    auto same_dir = [](const std::optional<Direction>& x, const std::optional<Direction>& y) {
        if (x.has_value() != y.has_value()) return false;
        return !x || x->vec == y->vec;
    };
    return a.n == b.n && a.log_sigmas == b.log_sigmas && a.log_eigen_moduli == b.log_eigen_moduli &&
           a.trusted_p == b.trusted_p && same_dir(a.u1, b.u1) && same_dir(a.v1, b.v1) &&
           a.direction_error == b.direction_error && a.log_abs_trace == b.log_abs_trace;
}

ScaledProduct::ScaledProduct(std::size_t dim, std::size_t max_p, bool track_qr)
    : max_p_(max_p), track_qr_(track_qr), b_(SquareMatrix::identity(dim)) {
    if (max_p < 1 || max_p > dim) {
        throw DomainError("max_p = " + std::to_string(max_p) + " outside [1, " + std::to_string(dim) + "]");
    }
    if (track_qr_) {
        q_ = SquareMatrix::identity(dim);
        tri_ = SquareMatrix::identity(dim);
        logdiag_.assign(dim, 0.0);
    }
    for (std::size_t p = 2; p <= max_p; ++p) {
        const std::size_t size = binomial(dim, p);
        if (size > kExteriorCap) {
            throw DomainError("exterior lift C(" + std::to_string(dim) + ", " + std::to_string(p) + ") = " +
                              std::to_string(size) + " exceeds the cap of " + std::to_string(kExteriorCap));
        }
        lifts_.emplace_back(size, 1, false);
    }
}

void ScaledProduct::push(const SquareMatrix& y) {
    const std::size_t d = dim();
    if (y.dim() != d) throw DomainError("push: factor dimension does not match the product");
    const double det = determinant(y);
    if (det == 0.0 || !std::isfinite(det)) throw DomainError("push: factor is singular");

    SquareMatrix c = y * b_;
    const double s = spectral_norm(c);
    if (!(s > 0.0) || !std::isfinite(s)) throw NumericalError("push: normalized product lost rank");
    c *= 1.0 / s;
    b_ = std::move(c);
    log_scale_ += std::log(s);
    log_det_sum_ += std::log(std::abs(det));

    if (track_qr_) {
        QrResult f = qr(y * q_);
        const Vector old = logdiag_;
        for (std::size_t i = 0; i < d; ++i) {
            if (!(f.r(i, i) > 0.0)) throw DomainError("push: factor is singular");
            logdiag_[i] += std::log(f.r(i, i));
        }
        // R' diag(D) = diag(D_new) U with U unit upper triangular.
        SquareMatrix u = SquareMatrix::identity(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) u(i, j) = f.r(i, j) / f.r(i, i) * std::exp(old[j] - old[i]);
        tri_ = u * tri_;
        q_ = std::move(f.q);
        if (!degraded_ && !(tri_.max_abs() < kTriangularGrowthLimit)) {
            degraded_ = true;
            log::warn("product accumulator: triangular factor exceeded 1e100 at step " + std::to_string(steps_ + 1) +
                      "; accumulated singular values no longer trusted");
        }
    }

    for (std::size_t p = 2; p <= max_p_; ++p) lifts_[p - 2].push(exterior_power(y, p).matrix);
    ++steps_;
}

LogSpectrum ScaledProduct::log_singular_values(SvMethod method) const {
    const std::size_t d = dim();
    LogSpectrum out;
    if (method == SvMethod::direct_svd) {
        const Vector s = singular_values(b_);
        out.values.resize(d);
        for (std::size_t k = 0; k < d; ++k) {
            out.values[k] = log_scale_ + safe_log(s[k]);
            if (out.trusted == k && s[k] > kTrustFloor * s[0]) ++out.trusted;
        }
        return out;
    }

    if (!track_qr_) throw DomainError("log_singular_values: this product does not keep a QR accumulator");
    // log(sigma_1 ... sigma_p) = top log-singular value of
    // wedge^p(diag(exp(ld))) * wedge^p(T), computed with the diagonal scaled by
    // its largest entry so that underflowing rows only drop negligible terms.
    Vector prefix(d + 1, 0.0);
    std::size_t exact_upto = 0;
    for (std::size_t p = 1; p <= d; ++p) {
        if (binomial(d, p) > kExteriorCap) break;
        const auto subsets = subset_enumeration(d, p);
        Vector weights(subsets.size());
        for (std::size_t k = 0; k < subsets.size(); ++k) {
            double s = 0.0;
            for (std::size_t e : subsets[k].elements) s += logdiag_[e - 1];
            weights[k] = s;
        }
        const double top = *std::max_element(weights.begin(), weights.end());
        SquareMatrix graded = p == d ? SquareMatrix::identity(1) : exterior_power(tri_, p).matrix;
        for (std::size_t i = 0; i < graded.dim(); ++i) {
            const double w = std::exp(weights[i] - top);
            for (std::size_t j = 0; j < graded.dim(); ++j) graded(i, j) *= w;
        }
        prefix[p] = top + std::log(spectral_norm(graded));
        exact_upto = p;
    }
    if (exact_upto < d) {
        // Beyond the exterior cap: one-sided Jacobi on the column-graded T^T D.
        const double top = *std::max_element(logdiag_.begin(), logdiag_.end());
        SquareMatrix graded = tri_.transpose();
        for (std::size_t j = 0; j < d; ++j) {
            const double w = std::exp(logdiag_[j] - top);
            for (std::size_t i = 0; i < d; ++i) graded(i, j) *= w;
        }
        const Vector s = singular_values(graded);
        for (std::size_t p = exact_upto + 1; p <= d; ++p) prefix[p] = prefix[p - 1] + top + safe_log(s[p - 1]);
    }
    out.values.resize(d);
    for (std::size_t p = 1; p <= d; ++p) out.values[p - 1] = prefix[p] - prefix[p - 1];
    std::stable_sort(out.values.begin(), out.values.end(), std::greater<>());
    out.trusted = degraded_ ? 0 : exact_upto;
    return out;
}

LogSpectrum ScaledProduct::log_eigen_moduli(std::size_t max_p) const {
    if (max_p < 1 || max_p > max_p_) {
        throw DomainError("log_eigen_moduli: max_p = " + std::to_string(max_p) + " but lifts were built up to " +
                          std::to_string(max_p_));
    }
    LogSpectrum out;
    out.values.resize(max_p);
    double prev = 0.0;
    bool trusted = true;
    for (std::size_t p = 1; p <= max_p; ++p) {
        const ScaledProduct& src = p == 1 ? *this : lifts_[p - 2];
        const double top = robust_eigen_moduli(src.b_).front();
        const double sum = src.log_scale_ + safe_log(top);
        out.values[p - 1] = sum - prev;
        prev = sum;
        // The top eigenvalue of the normalized lift is |lambda_1..p| / (sigma_1..p).
        trusted = trusted && top > kTrustFloor && std::isfinite(sum);
        if (trusted) out.trusted = p;
    }
    return out;
}

LogSpectrum ScaledProduct::log_eigen_moduli_direct() const {
    const Vector moduli = robust_eigen_moduli(b_);
    const Vector s = singular_values(b_);
    LogSpectrum out;
    out.values.resize(moduli.size());
    for (std::size_t k = 0; k < moduli.size(); ++k) {
        out.values[k] = log_scale_ + safe_log(moduli[k]);
        if (out.trusted == k && s[k] > kTrustFloor * s[0]) ++out.trusted;
    }
    return out;
}

double ScaledProduct::lift_log_norm(std::size_t p) const {
    if (p < 1 || p > max_p_) throw DomainError("lift_log_norm: p outside the built lifts");
    const ScaledProduct& src = p == 1 ? *this : lifts_[p - 2];
    return src.log_scale_ + std::log(spectral_norm(src.b_));
}

TopDirections ScaledProduct::top_directions() const {
    const SvdResult f = svd(b_);
    if (dim() > 1 && !(f.sigmas[0] > f.sigmas[1] * (1.0 + 1e-9))) {
        throw NumericalError("top direction ill-defined (sigma_1 and sigma_2 coincide)");
    }
    return {canonicalize(f.u.column(0)), canonicalize(f.v.column(0))};
}

double ScaledProduct::log_abs_trace() const { return log_scale_ + safe_log(std::abs(b_.trace())); }

SpectrumSnapshot ScaledProduct::snapshot(std::size_t max_p) const {
    SpectrumSnapshot s;
    s.n = steps_;
    const LogSpectrum sv = log_singular_values(track_qr_ ? SvMethod::qr_accumulated : SvMethod::direct_svd);
    const LogSpectrum eig = log_eigen_moduli(max_p);
    s.log_sigmas = sv.values;
    s.log_eigen_moduli = eig.values;
    s.trusted_p = std::min(sv.trusted, eig.trusted);
    try {
        TopDirections t = top_directions();
        s.u1 = std::move(t.u1);
        s.v1 = std::move(t.v1);
    } catch (const NumericalError& e) {
        s.direction_error = e.what();
    }
    s.log_abs_trace = log_abs_trace();
    return s;
}

std::size_t default_checkpoint_stride(std::size_t n_max) { return std::max<std::size_t>(1, (n_max + 39) / 40); }

std::vector<std::size_t> checkpoint_schedule(std::size_t n_max, std::size_t stride) {
    if (stride == 0) throw DomainError("checkpoint stride must be positive");
    std::vector<std::size_t> out;
    for (std::size_t n = stride; n <= n_max; n += stride) out.push_back(n);
    if (out.empty() || out.back() != n_max) out.push_back(n_max);
    return out;
}

}  // namespace lyap
