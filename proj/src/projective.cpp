#include "lyap/projective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lyap/error.hpp"
#include "lyap/exterior.hpp"
#include "lyap/parallel.hpp"

namespace lyap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kFurstenbergBlock = 1024;

// Applies m to a unit vector, renormalizes in place and returns log |m x|.
double push_unit(const SquareMatrix& m, Vector& x) {
    Vector y = m * x;
    const double len = norm2(y);
    if (!(len > 1e-300)) throw NumericalError("projective action: |M u| below 1e-300");
    for (double& v : y) v /= len;
    x = std::move(y);
    return std::log(len);
}

}  // namespace

Direction canonicalize(std::span<const double> v) {
    Direction d{normalized(v)};
    for (double x : d.vec) {
        if (x == 0.0) continue;
        if (x < 0.0)
            for (double& y : d.vec) y = -y;
        break;
    }
    for (double& x : d.vec)
        if (x == 0.0) x = 0.0;  // drop negative zeros
    return d;
}

Vector wedge(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw DomainError("wedge: length mismatch");
    const std::size_t d = u.size();
    Vector w;
    w.reserve(d * (d - 1) / 2);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) w.push_back(u[i] * v[j] - u[j] * v[i]);
    return w;
}

double delta(const Direction& u, const Direction& v) {
    // Lagrange identity: |u|^2 |v|^2 - <u,v>^2 = |u ^ v|^2.
    const double w = norm2(wedge(u.vec, v.vec)) / (norm2(u.vec) * norm2(v.vec));
    return std::min(1.0, w);
}

Direction act(const SquareMatrix& m, const Direction& u) {
    Vector y = m * u.vec;
    if (!(norm2(y) >= 1e-300)) throw NumericalError("act: |M u| below 1e-300 (pathological conditioning)");
    return canonicalize(y);
}

std::string EmpiricalDirectionMeasure::to_csv() const {
    std::ostringstream os;
    const std::size_t d = dim();
    for (std::size_t j = 0; j < d; ++j) os << (j ? "," : "") << "x" << (j + 1);
    os << "\n";
    for (const auto& a : atoms) {
        for (std::size_t j = 0; j < d; ++j) os << (j ? "," : "") << format_double(a.vec[j]);
        os << "\n";
    }
    return os.str();
}

EmpiricalDirectionMeasure estimate_invariant_measure(const EnsembleSpec& spec, std::size_t burn_in, std::size_t count,
                                                     std::uint64_t seed, std::size_t workers) {
    if (count == 0) throw DomainError("estimate_invariant_measure: count must be positive");
    spec.validate();
    EmpiricalDirectionMeasure nu;
    nu.atoms.resize(count);
    parallel_for(count, workers, [&](std::size_t i) {
        Rng rng = Rng::child(seed, i, Stream::measure);
        Vector x = rng.unit_vector(spec.dim);
        for (std::size_t k = 0; k < burn_in; ++k) push_unit(sample(spec, rng), x);
        nu.atoms[i] = canonicalize(x);
    });
    return nu;
}

Estimate furstenberg_gamma1(const EnsembleSpec& spec, const EmpiricalDirectionMeasure& nu, std::size_t samples,
                            std::uint64_t seed, std::size_t workers) {
    if (nu.atoms.empty()) throw DomainError("furstenberg_gamma1: empty measure");
    if (samples == 0) throw DomainError("furstenberg_gamma1: samples must be positive");
    std::vector<double> values(samples);
    const std::size_t blocks = (samples + kFurstenbergBlock - 1) / kFurstenbergBlock;
    parallel_for(blocks, workers, [&](std::size_t b) {
        Rng rng = Rng::child(seed, b, Stream::furstenberg);
        const std::size_t end = std::min(samples, (b + 1) * kFurstenbergBlock);
        for (std::size_t i = b * kFurstenbergBlock; i < end; ++i) {
            const Vector& x = nu.atoms[i % nu.atoms.size()].vec;
            values[i] = std::log(norm2(sample(spec, rng) * x));
        }
    });
    return mean_stderr(values);
}

namespace {

struct PairTracker {
    Vector u;
    Vector v;
    Vector w;
};

// log of delta(S_n u, S_n v) / delta(u, v) for one random product.
double log_contraction_ratio(const EnsembleSpec& spec, const Direction& u, const Direction& v, std::size_t n,
                             Rng& rng) {
    PairTracker t{u.vec, v.vec, wedge(u.vec, v.vec)};
    const double wlen = norm2(t.w);
    if (!(wlen > 0.0)) throw DomainError("contraction ratio: directions coincide");
    for (double& x : t.w) x /= wlen;
    double log_ratio = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const SquareMatrix y = sample(spec, rng);
        log_ratio -= push_unit(y, t.u);
        log_ratio -= push_unit(y, t.v);
        log_ratio += push_unit(exterior_power(y, 2).matrix, t.w);
    }
    return log_ratio;
}

Direction near_partner(const Direction& center, double separation, Rng& rng) {
    // v = cos(theta) c + sin(theta) w with w a unit vector orthogonal to c.
    Vector w = rng.unit_vector(center.dim());
    const double proj = dot(w, center.vec);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= proj * center.vec[i];
    w = normalized(w);
    const double s = separation;
    const double c = std::sqrt(1.0 - s * s);
    Vector v(center.dim());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * center.vec[i] + s * w[i];
    return canonicalize(v);
}

}  // namespace

Estimate contraction_moment(const EnsembleSpec& spec, const Direction& u, const Direction& v, double alpha,
                            std::size_t n, std::size_t trials, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> values(trials);
    for (auto& x : values) x = std::exp(alpha * log_contraction_ratio(spec, u, v, n, rng));
    return mean_stderr(values);
}

SupEstimate estimate_A(const EnsembleSpec& spec, double alpha, std::size_t n, std::size_t pair_count,
                       std::uint64_t seed, const ContractionOptions& options) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("estimate_A: alpha must lie in (0, 1]");
    if (n < 1) throw DomainError("estimate_A: n must be at least 1");
    if (options.trials == 0) throw DomainError("estimate_A: trials must be positive");
    spec.validate();

    // Candidate pairs: random pairs, then near-coincident pairs around random centers.
    Rng pair_rng = Rng::child(seed, 0, Stream::contraction);
    std::vector<std::pair<Direction, Direction>> pairs;
    for (std::size_t i = 0; i < pair_count; ++i) {
        Direction u = canonicalize(pair_rng.unit_vector(spec.dim));
        Direction v = canonicalize(pair_rng.unit_vector(spec.dim));
        pairs.emplace_back(std::move(u), std::move(v));
    }
    const std::size_t centers = options.near_centers ? options.near_centers : std::max<std::size_t>(1, pair_count / 8);
    for (double sep : options.near_deltas) {
        for (std::size_t c = 0; c < centers; ++c) {
            Direction u = canonicalize(pair_rng.unit_vector(spec.dim));
            Direction v = near_partner(u, sep, pair_rng);
            pairs.emplace_back(std::move(u), std::move(v));
        }
    }

    std::vector<double> means(pairs.size());
    parallel_for(pairs.size(), options.workers, [&](std::size_t i) {
        Rng rng = Rng::child(seed, i + 1, Stream::contraction);
        double sum = 0.0;
        for (std::size_t t = 0; t < options.trials; ++t)
            sum += std::exp(alpha * log_contraction_ratio(spec, pairs[i].first, pairs[i].second, n, rng));
        means[i] = sum / static_cast<double>(options.trials);
    });
    const double worst = *std::max_element(means.begin(), means.end());
    return {std::pow(worst, 1.0 / static_cast<double>(n)), false, true};
}

double integrability_at(const EmpiricalDirectionMeasure& nu, double beta, std::span<const double> y) {
    double sum = 0.0;
    for (const auto& atom : nu.atoms) {
        const double ip = std::abs(dot(atom.vec, y)) / norm2(atom.vec);
        if (ip < 1e-15) return kInf;
        sum += std::pow(ip, -beta);
    }
    return sum / static_cast<double>(nu.atoms.size());
}

SupEstimate estimate_B(const EmpiricalDirectionMeasure& nu, double beta, std::size_t probe_count, std::uint64_t seed,
                       std::span<const Vector> extra_probes) {
    if (!(beta > 0.0)) throw DomainError("estimate_B: beta must be positive");
    if (nu.atoms.empty()) throw DomainError("estimate_B: empty measure");
    Rng rng(mix64(seed ^ 0xb0b0b0b0ULL));
    SupEstimate out;
    auto consider = [&](std::span<const double> y) {
        const double v = integrability_at(nu, beta, normalized(y));
        if (std::isinf(v)) out.infinite = true;
        out.value = std::max(out.value, v);
    };
    for (const auto& y : extra_probes) consider(y);
    for (std::size_t i = 0; i < probe_count; ++i) consider(rng.unit_vector(nu.dim()));
    return out;
}

EmpiricalDirectionMeasure pushforward(const EnsembleSpec& spec, const EmpiricalDirectionMeasure& nu,
                                      std::uint64_t seed) {
    Rng rng(mix64(seed ^ 0x9f1e5ULL));
    EmpiricalDirectionMeasure out;
    out.atoms.reserve(nu.size());
    for (const auto& a : nu.atoms) out.atoms.push_back(act(sample(spec, rng), a));
    return out;
}

double invariance_ks(const EnsembleSpec& spec, const EmpiricalDirectionMeasure& nu, std::uint64_t seed) {
    const EmpiricalDirectionMeasure pushed = pushforward(spec, nu, seed);
    auto squared_first = [](const EmpiricalDirectionMeasure& m) {
        std::vector<double> out;
        out.reserve(m.size());
        for (const auto& a : m.atoms) out.push_back(a.vec[0] * a.vec[0]);
        return out;
    };
    return ks_two_sample(squared_first(nu), squared_first(pushed));
}

}  // namespace lyap
