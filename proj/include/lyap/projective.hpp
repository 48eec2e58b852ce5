#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lyap/ensembles.hpp"
#include "lyap/matrix.hpp"
#include "lyap/stats.hpp"

namespace lyap {

/// Point of the projective space P(R^d): unit vector whose first nonzero
/// coordinate is positive.
struct Direction {
    Vector vec;
    std::size_t dim() const noexcept { return vec.size(); }
};

/// Throws DomainError on a zero vector.
Direction canonicalize(std::span<const double> v);

/// Projective distance sqrt(1 - <u,v>^2), evaluated as the norm of u ^ v so
/// nearly coincident directions keep full relative precision.
double delta(const Direction& u, const Direction& v);

/// Direction of m * u. Throws NumericalError when |m u| < 1e-300.
Direction act(const SquareMatrix& m, const Direction& u);

/// Coordinates of u ^ v in the dictionary-ordered basis of the second
/// exterior power, matching exterior_power(m, 2).
Vector wedge(std::span<const double> u, std::span<const double> v);

/// Equal-weight atoms approximating the mu-invariant law nu.
struct EmpiricalDirectionMeasure {
    std::vector<Direction> atoms;

    std::size_t size() const noexcept { return atoms.size(); }
    std::size_t dim() const noexcept { return atoms.empty() ? 0 : atoms.front().dim(); }
    double weight() const noexcept { return atoms.empty() ? 0.0 : 1.0 / static_cast<double>(atoms.size()); }

    /// One atom per row, d columns, header x1..xd.
    std::string to_csv() const;
};

inline std::size_t default_burn_in(std::size_t dim) { return 50 * dim; }

/// count independent chains: uniform random start, burn_in random factors
/// applied through act, endpoint recorded. Chain i uses its own child
/// generator, so the result is independent of `workers`.
EmpiricalDirectionMeasure estimate_invariant_measure(const EnsembleSpec& spec, std::size_t burn_in, std::size_t count,
                                                     std::uint64_t seed, std::size_t workers = 1);

/// Monte Carlo average of log |M x| over `samples` independent pairs
/// (M ~ mu, x cycling through the atoms of nu).
Estimate furstenberg_gamma1(const EnsembleSpec& spec, const EmpiricalDirectionMeasure& nu, std::size_t samples,
                            std::uint64_t seed, std::size_t workers = 1);

/// Result of a sup approximated by a max over finitely many candidates.
struct SupEstimate {
    double value = 0.0;
    bool infinite = false;
    bool lower_bound = true;  // always set: a max over samples bounds the sup from below
};

struct ContractionOptions {
    std::size_t trials = 256;
    /// Separations of the near-coincident pair family.
    std::vector<double> near_deltas = {1e-1, 1e-3, 1e-6};
    /// Centers per separation; 0 means max(1, pair_count / 8).
    std::size_t near_centers = 0;
    std::size_t workers = 1;
};

/// Estimate of the contraction coefficient
/// [ max over pairs of E (delta(S_n u, S_n v) / delta(u, v))^alpha ]^(1/n).
/// The ratio is evaluated as |wedge2(S_n) (u^v)| / (|S_n u| |S_n v|), exact for
/// arbitrarily close pairs. Throws DomainError unless alpha in (0, 1], n >= 1.
SupEstimate estimate_A(const EnsembleSpec& spec, double alpha, std::size_t n, std::size_t pair_count,
                       std::uint64_t seed, const ContractionOptions& options = {});

/// Un-rooted expectation E ratio^alpha for a single pair, for diagnostics.
Estimate contraction_moment(const EnsembleSpec& spec, const Direction& u, const Direction& v, double alpha,
                            std::size_t n, std::size_t trials, std::uint64_t seed);

/// Estimate of sup_y integral |<x,y>|^-beta d nu(x), max over probe_count
/// random unit probes plus `extra_probes`. A probe with some |<x,y>| < 1e-15
/// is infinite. Throws DomainError for beta <= 0.
SupEstimate estimate_B(const EmpiricalDirectionMeasure& nu, double beta, std::size_t probe_count, std::uint64_t seed,
                       std::span<const Vector> extra_probes = {});

/// Atom average of |<x,y>|^-beta for one probe (+inf when orthogonal).
double integrability_at(const EmpiricalDirectionMeasure& nu, double beta, std::span<const double> y);

/// Applies one fresh factor to every atom.
EmpiricalDirectionMeasure pushforward(const EnsembleSpec& spec, const EmpiricalDirectionMeasure& nu,
                                      std::uint64_t seed);

/// KS distance between the laws of <w,e1>^2 under nu and under its pushforward.
double invariance_ks(const EnsembleSpec& spec, const EmpiricalDirectionMeasure& nu, std::uint64_t seed);

}  // namespace lyap
