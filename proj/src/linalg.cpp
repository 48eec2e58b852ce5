#include "lyap/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lyap/error.hpp"

namespace lyap {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxJacobiSweeps = 80;
constexpr double kNegligibleColumn = 1e-140;

std::vector<std::size_t> descending_order(const Vector& values) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return idx;
}

// Fills columns of q flagged in `missing` with unit vectors orthogonal to the
// other columns (modified Gram-Schmidt against the canonical basis).
void complete_orthonormal(std::vector<Vector>& cols, const std::vector<bool>& missing) {
    const std::size_t n = cols.size();
    std::size_t candidate = 0;
    for (std::size_t c = 0; c < n; ++c) {
        if (!missing[c]) continue;
        while (candidate < n) {
            Vector w = basis_vector(n, candidate++);
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == c || (missing[k] && k > c)) continue;
                    const double proj = dot(w, cols[k]);
                    for (std::size_t i = 0; i < n; ++i) w[i] -= proj * cols[k][i];
                }
            }
            const double len = norm2(w);
            if (len > 1e-8) {
                for (double& x : w) x /= len;
                cols[c] = std::move(w);
                break;
            }
        }
    }
}

}  // namespace

SvdResult svd(const SquareMatrix& m) {
    const std::size_t n = m.dim();
    if (!m.all_finite()) throw DomainError("svd: non-finite input");

    const double scale = m.max_abs();
    if (scale == 0.0) {
        return {SquareMatrix::identity(n), Vector(n, 0.0), SquareMatrix::identity(n)};
    }

    // Columns of the working matrix and of V, stored contiguously.
    std::vector<Vector> a(n, Vector(n));
    std::vector<Vector> v(n, Vector(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) a[j][i] = m(i, j) / scale;
        v[j][j] = 1.0;
    }

    const double tol = kEps * static_cast<double>(n);
    bool converged = n == 1;
    for (int sweep = 0; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
        converged = true;
        double largest = 0.0;
        for (const auto& col : a) largest = std::max(largest, norm2(col));
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double ni = norm2(a[i]);
                const double nj = norm2(a[j]);
                // Columns below this ratio cannot move the leading values; their
                // dot products would underflow.
                if (std::min(ni, nj) <= kNegligibleColumn * largest) continue;
                const double gamma = dot(a[i], a[j]);
                if (gamma == 0.0 || std::abs(gamma) / ni / nj <= tol) continue;
                converged = false;
                const double zeta = (nj - ni) * (nj + ni) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                for (std::size_t k = 0; k < n; ++k) {
                    const double ai = a[i][k];
                    const double aj = a[j][k];
                    a[i][k] = c * ai - s * aj;
                    a[j][k] = s * ai + c * aj;
                    const double vi = v[i][k];
                    const double vj = v[j][k];
                    v[i][k] = c * vi - s * vj;
                    v[j][k] = s * vi + c * vj;
                }
            }
        }
    }

    Vector norms(n);
    for (std::size_t j = 0; j < n; ++j) norms[j] = norm2(a[j]);
    if (!converged) {
        const double lo = *std::min_element(norms.begin(), norms.end());
        const double hi = *std::max_element(norms.begin(), norms.end());
        std::ostringstream os;
        os << "svd: Jacobi sweeps did not converge after " << kMaxJacobiSweeps
           << " sweeps (condition estimate " << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity())
           << ")";
        throw NumericalError(os.str());
    }

    const auto order = descending_order(norms);
    std::vector<Vector> ucols(n);
    std::vector<bool> missing(n, false);
    SvdResult out{SquareMatrix(n), Vector(n), SquareMatrix(n)};
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t j = order[c];
        out.sigmas[c] = norms[j] * scale;
        // Columns the sweep skipped as negligible carry no reliable direction.
        if (norms[j] > kNegligibleColumn * norms[order[0]]) {
            ucols[c] = a[j];
            for (double& x : ucols[c]) x /= norms[j];
        } else {
            ucols[c] = Vector(n, 0.0);
            missing[c] = true;
        }
        for (std::size_t k = 0; k < n; ++k) out.v(k, c) = v[j][k];
    }
    if (std::find(missing.begin(), missing.end(), true) != missing.end()) {
        complete_orthonormal(ucols, missing);
    }
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t k = 0; k < n; ++k) out.u(k, c) = ucols[c][k];
    return out;
}

Vector singular_values(const SquareMatrix& m) { return svd(m).sigmas; }

double spectral_norm(const SquareMatrix& m) { return svd(m).sigmas.front(); }

namespace {

// Parlett-Reinsch balancing with radix 2 (exact in binary floating point).
void balance(std::vector<double>& h, std::size_t n) {
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    auto at = [&](std::size_t i, std::size_t j) -> double& { return h[i * n + j]; };
    bool done = false;
    int guard = 0;
    while (!done && guard++ < 100) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(at(j, i));
                r += std::abs(at(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) at(i, j) *= g;
                for (std::size_t j = 0; j < n; ++j) at(j, i) *= f;
            }
        }
    }
}

// Householder similarity reduction to upper Hessenberg form.
void hessenberg(std::vector<double>& h, std::size_t n) {
    auto at = [&](std::size_t i, std::size_t j) -> double& { return h[i * n + j]; };
    Vector w(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha = std::max(alpha, std::abs(at(i, k)));
        if (alpha == 0.0) continue;
        double sigma = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            w[i] = at(i, k) / alpha;
            sigma += w[i] * w[i];
        }
        const double len = std::copysign(std::sqrt(sigma), w[k + 1]);
        w[k + 1] += len;
        const double beta = len * w[k + 1];  // = |w|^2 / 2
        if (beta == 0.0) continue;
        // H <- (I - w w^T / beta) H (I - w w^T / beta)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += w[i] * at(i, j);
            s /= beta;
            for (std::size_t i = k + 1; i < n; ++i) at(i, j) -= s * w[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += at(i, j) * w[j];
            s /= beta;
            for (std::size_t j = k + 1; j < n; ++j) at(i, j) -= s * w[j];
        }
        for (std::size_t i = k + 2; i < n; ++i) at(i, k) = 0.0;
    }
}

// Francis double-shift QR on an upper Hessenberg matrix (EISPACK hqr
// structure), returning eigenvalue real and imaginary parts.
void hessenberg_qr(std::vector<double>& h, std::size_t n, Vector& wr, Vector& wi) {
    // 1-based accessor keeps the index arithmetic close to the classic form.
    auto a = [&](int i, int j) -> double& {
        return h[static_cast<std::size_t>(i - 1) * n + static_cast<std::size_t>(j - 1)];
    };
    const int dim = static_cast<int>(n);
    const int total_cap = 10 * dim * dim;
    int total_its = 0;

    double anorm = 0.0;
    for (int i = 1; i <= dim; ++i)
        for (int j = std::max(i - 1, 1); j <= dim; ++j) anorm += std::abs(a(i, j));

    int nn = dim;
    double t = 0.0;
    while (nn >= 1) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 2; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) <= kEps * s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                wr[static_cast<std::size_t>(nn - 1)] = x + t;
                wi[static_cast<std::size_t>(nn - 1)] = 0.0;
                --nn;
            } else {
                double y = a(nn - 1, nn - 1);
                double w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + w;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    const auto i1 = static_cast<std::size_t>(nn - 2);
                    const auto i2 = static_cast<std::size_t>(nn - 1);
                    if (q >= 0.0) {
                        z = p + std::copysign(z, p);
                        wr[i1] = wr[i2] = x + z;
                        if (z != 0.0) wr[i2] = x - w / z;
                        wi[i1] = wi[i2] = 0.0;
                    } else {
                        wr[i1] = wr[i2] = x + p;
                        wi[i1] = -z;
                        wi[i2] = z;
                    }
                    nn -= 2;
                } else {
                    if (its == 30 || total_its >= total_cap) {
                        throw NumericalError("eigen_moduli: shifted QR iteration cap reached (" +
                                             std::to_string(total_its) + " iterations, d = " +
                                             std::to_string(dim) + ")");
                    }
                    if (its == 10 || its == 20) {
                        // Exceptional shift.
                        t += x;
                        for (int i = 1; i <= nn; ++i) a(i, i) -= x;
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    ++total_its;
                    int m = nn - 2;
                    double p = 0.0;
                    double q = 0.0;
                    double r = 0.0;
                    double z = 0.0;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v =
                            std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u <= kEps * v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a(i, i - 2) = 0.0;
                        if (i != m + 2) a(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1) r = a(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a(k, k - 1) = -a(k, k - 1);
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a(k, j) + q * a(k + 1, j);
                            if (k != nn - 1) {
                                p += r * a(k + 2, j);
                                a(k + 2, j) -= p * z;
                            }
                            a(k + 1, j) -= p * y;
                            a(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a(i, k) + y * a(i, k + 1);
                            if (k != nn - 1) {
                                p += z * a(i, k + 2);
                                a(i, k + 2) -= p * r;
                            }
                            a(i, k + 1) -= p * q;
                            a(i, k) -= p;
                        }
                    }
                }
            }
        } while (nn >= 1 && l < nn - 1);
    }
}

}  // namespace

Vector eigen_moduli(const SquareMatrix& m) {
    const std::size_t n = m.dim();
    if (!m.all_finite()) throw DomainError("eigen_moduli: non-finite input");
    if (n == 1) return {std::abs(m(0, 0))};

    std::vector<double> h(m.row_major().begin(), m.row_major().end());
    balance(h, n);
    hessenberg(h, n);
    Vector wr(n, 0.0);
    Vector wi(n, 0.0);
    hessenberg_qr(h, n, wr, wi);

    Vector moduli(n);
    for (std::size_t i = 0; i < n; ++i) moduli[i] = std::hypot(wr[i], wi[i]);
    std::stable_sort(moduli.begin(), moduli.end(), std::greater<>());
    return moduli;
}

QrResult qr(const SquareMatrix& m) {
    const std::size_t n = m.dim();
    SquareMatrix r = m;
    SquareMatrix q = SquareMatrix::identity(n);
    Vector w(n);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k; i < n; ++i) alpha = std::max(alpha, std::abs(r(i, k)));
        if (alpha == 0.0) continue;
        double sigma = 0.0;
        for (std::size_t i = k; i < n; ++i) {
            w[i] = r(i, k) / alpha;
            sigma += w[i] * w[i];
        }
        const double len = std::copysign(std::sqrt(sigma), w[k]);
        w[k] += len;
        const double beta = len * w[k];
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += w[i] * r(i, j);
            s /= beta;
            for (std::size_t i = k; i < n; ++i) r(i, j) -= s * w[i];
        }
        // Q <- Q (I - w w^T / beta)
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k; j < n; ++j) s += q(i, j) * w[j];
            s /= beta;
            for (std::size_t j = k; j < n; ++j) q(i, j) -= s * w[j];
        }
        for (std::size_t i = k + 1; i < n; ++i) r(i, k) = 0.0;
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (r(k, k) < 0.0) {
            for (std::size_t j = k; j < n; ++j) r(k, j) = -r(k, j);
            for (std::size_t i = 0; i < n; ++i) q(i, k) = -q(i, k);
        }
    }
    return {std::move(q), std::move(r)};
}

LuResult lu(const SquareMatrix& m) {
    const std::size_t n = m.dim();
    LuResult out{m, std::vector<std::size_t>(n), 1, false};
    std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
    SquareMatrix& a = out.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(a(i, k)) > best) {
                best = std::abs(a(i, k));
                piv = i;
            }
        }
        if (best == 0.0) {
            out.singular = true;
            continue;
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(out.perm[k], out.perm[piv]);
            out.sign = -out.sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            a(i, k) = f;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return out;
}

double determinant(const SquareMatrix& m) {
    const LuResult f = lu(m);
    if (f.singular) return 0.0;
    double det = f.sign;
    for (std::size_t i = 0; i < m.dim(); ++i) det *= f.lu(i, i);
    return det;
}

SquareMatrix inverse(const SquareMatrix& m) {
    const std::size_t n = m.dim();
    const LuResult f = lu(m);
    if (f.singular) throw DomainError("inverse: matrix is not invertible");
    SquareMatrix inv(n);
    Vector col(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < n; ++i) col[i] = f.perm[i] == c ? 1.0 : 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) col[i] -= f.lu(i, j) * col[j];
        for (std::size_t ii = n; ii-- > 0;) {
            for (std::size_t j = ii + 1; j < n; ++j) col[ii] -= f.lu(ii, j) * col[j];
            col[ii] /= f.lu(ii, ii);
        }
        for (std::size_t i = 0; i < n; ++i) inv(i, c) = col[i];
    }
    return inv;
}

double ell(const SquareMatrix& m) {
    const Vector s = singular_values(m);
    const double top = s.front();
    const double bottom = s.back();
    if (!(top > 0.0) || bottom <= top * kEps * static_cast<double>(m.dim())) {
        throw DomainError("ell: matrix is not invertible");
    }
    return std::max({0.0, std::log(top), -std::log(bottom)});
}

bool is_scaled_orthogonal(const SquareMatrix& m, double tol) {
    const Vector s = singular_values(m);
    if (!(s.back() > 0.0)) return false;
    return s.front() / s.back() <= 1.0 + tol;
}

}  // namespace lyap
