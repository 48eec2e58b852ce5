#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lyap/config.hpp"
#include "lyap/matrix.hpp"
#include "lyap/rng.hpp"

namespace lyap {

enum class Family { uniform, gaussian, two_point };

/// Law of a single matrix entry.
struct ScalarDistribution {
    Family family = Family::uniform;
    /// uniform: (a, b); gaussian: (mean, sd); two_point: (prob of +1, unused).
    double first = 0.0;
    double second = 1.0;

    static ScalarDistribution uniform(double a, double b);
    static ScalarDistribution gaussian(double mean, double sd);
    /// Takes values +1 with probability prob and -1 otherwise.
    static ScalarDistribution two_point(double prob);

    void validate() const;
    double draw(Rng& rng) const;
    std::string describe() const;
};

enum class EnsembleKind { iid_entries, isotropic_gaussian, fixed_set, deterministic };

std::string to_string(EnsembleKind kind);
std::string to_string(Family family);

/// Declarative description of the law mu of one factor Y_1.
struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::deterministic;
    std::size_t dim = 2;
    ScalarDistribution entries;             // iid_entries
    double sd = 1.0;                        // isotropic_gaussian
    std::vector<SquareMatrix> matrices;     // fixed_set (or the single deterministic matrix)
    std::vector<double> probabilities;      // fixed_set
    bool isotropic_tag = false;             // user asserts closure under orthogonal conjugation
    bool transposed = false;                // sample Y^T instead of Y

    static constexpr std::size_t kMinDim = 2;
    static constexpr std::size_t kMaxDim = 12;

    static EnsembleSpec iid(ScalarDistribution dist, std::size_t dim);
    static EnsembleSpec isotropic_gaussian(std::size_t dim, double sd);
    static EnsembleSpec fixed_set(std::vector<SquareMatrix> matrices, std::vector<double> probabilities);
    static EnsembleSpec deterministic(SquareMatrix m);

    /// Throws ConfigError describing the first violated invariant.
    void validate() const;

    EnsembleSpec with_transpose(bool on = true) const;

    /// Canonical [ensemble] section; from_section(to_section()) == *this.
    ConfigSection to_section() const;
    static EnsembleSpec from_section(const ConfigSection& section);
    static const std::vector<std::string>& section_keys();

    /// 16 hex digits of FNV-1a over the canonical section text.
    std::string hash() const;
};

/// One draw from mu. Draws with determinant exactly zero are discarded and
/// redrawn; `resamples` counts them.
SquareMatrix sample(const EnsembleSpec& spec, Rng& rng, std::size_t& resamples);
SquareMatrix sample(const EnsembleSpec& spec, Rng& rng);

/// Closed-form moment quantities for one entry law.
struct MomentReport {
    /// E|xi|^tau.
    double pos_moment = 0.0;
    /// Density bound K; nullopt when the law has no density.
    std::optional<double> density_bound;
    /// min over eps > 0 of K*2*eps^(1-tau)/(1-tau) + eps^-tau, or +inf when the
    /// law has atoms.
    double neg_moment_bound = 0.0;
    /// Minimizing eps = tau / (2K); nullopt when not applicable.
    std::optional<double> optimal_epsilon;
};

/// Throws DomainError for tau <= 0, and "negative-moment bound requires tau < 1" when
/// a density family is asked for tau >= 1.
MomentReport moment_report(const ScalarDistribution& dist, double tau);

bool support_open_set(const ScalarDistribution& dist);

/// True iff some sampled (isotropic_gaussian) or listed (fixed_set,
/// deterministic) matrix has sigma_1/sigma_d > 1 + 1e-6, i.e. M/|M| is not
/// orthogonal. Throws DomainError for iid_entries.
bool isotropic_contracting_witness(const EnsembleSpec& spec, Rng& rng, std::size_t draws = 10);

enum class Verdict { pass, unknown, fail };
std::string to_string(Verdict v);

struct ConditionReport {
    std::optional<bool> support_open_set;
    double moment_tau = 0.5;
    std::optional<bool> pos_moment_finite;
    std::optional<double> pos_moment;
    /// +inf encodes the infinite flag; nullopt means not applicable/unknown.
    std::optional<double> neg_moment_bound;
    std::optional<bool> isotropic_contracting_witness;
    Verdict verdict = Verdict::unknown;
    std::string verdict_text;
};

inline constexpr double kDefaultTau = 0.5;

ConditionReport condition_check(const EnsembleSpec& spec, double tau, Rng& rng);

}  // namespace lyap
