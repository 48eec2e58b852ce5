#pragma once

#include <cstdint>
#include <random>

#include "lyap/matrix.hpp"

namespace lyap {

/// Named sub-streams of a trajectory's randomness. Streams never share state,
/// so probe vectors stay independent of the factor sequence.
enum class Stream : std::uint64_t {
    factors = 0,
    probes = 1,
    measure = 2,
    furstenberg = 3,
    contraction = 4,
    pilot = 5,
    checks = 6,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic generator with explicit splitting.
///
/// child(master, index, stream) is a pure function of its arguments; every
/// trajectory or chain owns its own child, which makes results independent
/// of scheduling and worker count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

    static Rng child(std::uint64_t master_seed, std::uint64_t index, Stream stream) {
        return Rng(mix64(mix64(master_seed ^ mix64(static_cast<std::uint64_t>(stream) + 0x51ed27ULL)) + index));
    }

    std::uint64_t seed() const noexcept { return seed_; }

    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(engine_); }
    double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(engine_); }
    bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }
    std::uint64_t next() { return engine_(); }

    /// Uniformly distributed point on the unit sphere of R^dim.
    Vector unit_vector(std::size_t dim);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace lyap
