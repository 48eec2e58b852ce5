#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lyap/ensembles.hpp"
#include "lyap/error.hpp"
#include "lyap/linalg.hpp"
#include "oracle_values.hpp"

using namespace lyap;

TEST_CASE("scalar distribution parameter checks") {
    CHECK_THROWS_AS(ScalarDistribution::uniform(1.0, 1.0).validate(), ConfigError);
    CHECK_THROWS_AS(ScalarDistribution::gaussian(0.0, 0.0).validate(), ConfigError);
    CHECK_THROWS_AS(ScalarDistribution::two_point(1.0).validate(), ConfigError);
    CHECK_NOTHROW(ScalarDistribution::two_point(0.3).validate());
}

TEST_CASE("deterministic ensemble always returns its matrix") {
    const auto spec = EnsembleSpec::deterministic(SquareMatrix::diagonal({2.0, 1.0}));
    Rng rng(1);
    for (int i = 0; i < 10; ++i) CHECK(sample(spec, rng) == SquareMatrix::diagonal({2.0, 1.0}));
}

TEST_CASE("uniform(0,1) entries stay in the open unit interval") {
    const auto spec = EnsembleSpec::iid(ScalarDistribution::uniform(0.0, 1.0), 3);
    Rng rng(2);
    for (int t = 0; t < 1000; ++t) {
        const auto m = sample(spec, rng);
        CHECK(m.dim() == 3);
        for (double x : m.row_major()) {
            CHECK(x > 0.0);
            CHECK(x < 1.0);
        }
    }
}

TEST_CASE("isotropic gaussian entries have mean zero") {
    const auto spec = EnsembleSpec::isotropic_gaussian(2, 1.0);
    Rng rng(3);
    const int draws = 100000;
    double sum = 0.0;
    for (int t = 0; t < draws; ++t) {
        const auto m = sample(spec, rng);
        for (double x : m.row_major()) sum += x;
    }
    const double mean = sum / (4.0 * draws);
    CHECK(std::abs(mean) < 4e-3);
}

TEST_CASE("isotropic gaussian is invariant under orthogonal conjugation") {
    const auto spec = EnsembleSpec::isotropic_gaussian(3, 2.0);
    Rng krng(9);
    const auto k = qr(testing::random_matrix(krng, 3)).q;
    Rng a(4);
    Rng b(5);
    const int draws = 20000;
    std::vector<double> m1(9, 0.0), m2(9, 0.0), c1(9, 0.0), c2(9, 0.0);
    for (int t = 0; t < draws; ++t) {
        const auto x = sample(spec, a);
        const auto y = k * sample(spec, b) * k.transpose();
        for (std::size_t i = 0; i < 9; ++i) {
            m1[i] += x.row_major()[i];
            m2[i] += x.row_major()[i] * x.row_major()[i];
            c1[i] += y.row_major()[i];
            c2[i] += y.row_major()[i] * y.row_major()[i];
        }
    }
    const double n = draws;
    // Entries are N(0, 4): a mean difference has variance 8/n, a second-moment
    // difference 2 * 32 / n. Pooled over the 9 entries both shrink by 9.
    double pooled1 = 0.0;
    double pooled2 = 0.0;
    double chi1 = 0.0;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
        const double d1 = m1[i] / n - c1[i] / n;
        const double d2 = m2[i] / n - c2[i] / n;
        pooled1 += d1 / 9.0;
        pooled2 += d2 / 9.0;
        chi1 += d1 * d1 / (8.0 / n);
        chi2 += d2 * d2 / (64.0 / n);
    }
    CHECK(std::abs(pooled1) < 3.0 * std::sqrt(8.0 / n / 9.0));
    CHECK(std::abs(pooled2) < 3.0 * std::sqrt(64.0 / n / 9.0));
    // Per-entry z-scores: sum of squares against the 99.9% point of chi^2(9).
    CHECK(chi1 < 27.88);
    CHECK(chi2 < 27.88);
}

TEST_CASE("sampling is deterministic in the generator state") {
    const auto spec = EnsembleSpec::iid(ScalarDistribution::gaussian(0.5, 2.0), 4);
    Rng a = Rng::child(77, 3, Stream::factors);
    Rng b = Rng::child(77, 3, Stream::factors);
    for (int t = 0; t < 50; ++t) CHECK(sample(spec, a) == sample(spec, b));
    Rng c = Rng::child(77, 4, Stream::factors);
    Rng again = Rng::child(77, 3, Stream::factors);
    CHECK_FALSE(sample(spec, c) == sample(spec, again));
}

TEST_CASE("singular draws are resampled and counted") {
    // Two-point entries in d = 2 are singular with probability 1/2.
    const auto spec = EnsembleSpec::iid(ScalarDistribution::two_point(0.5), 2);
    Rng rng(6);
    std::size_t resamples = 0;
    for (int t = 0; t < 200; ++t) CHECK(determinant(sample(spec, rng, resamples)) != 0.0);
    CHECK(resamples > 0);
    std::size_t none = 0;
    const auto cont = EnsembleSpec::isotropic_gaussian(3, 1.0);
    for (int t = 0; t < 200; ++t) sample(cont, rng, none);
    CHECK(none == 0);
}

TEST_CASE("fixed set validation") {
    CHECK_THROWS_AS(EnsembleSpec::fixed_set({}, {}).validate(), ConfigError);
    const auto a = SquareMatrix::diagonal({2.0, 1.0});
    const auto b = SquareMatrix::rotation(0.5);
    CHECK_THROWS_AS(EnsembleSpec::fixed_set({a, b}, {0.5, 0.6}).validate(), ConfigError);
    CHECK_THROWS_AS(EnsembleSpec::fixed_set({a, SquareMatrix(2, {1, 2, 2, 4})}, {0.5, 0.5}).validate(), ConfigError);
    CHECK_NOTHROW(EnsembleSpec::fixed_set({a, b}, {0.25, 0.75}).validate());
}

TEST_CASE("fixed set draws follow the probabilities") {
    const auto a = SquareMatrix::diagonal({2.0, 1.0});
    const auto b = SquareMatrix::rotation(0.5);
    const auto spec = EnsembleSpec::fixed_set({a, b}, {0.25, 0.75});
    Rng rng(7);
    int count_a = 0;
    const int n = 40000;
    for (int t = 0; t < n; ++t) count_a += sample(spec, rng) == a;
    CHECK(std::abs(count_a / double(n) - 0.25) < 4.0 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("transposed ensembles sample the transpose") {
    const SquareMatrix m(2, {1, 2, 0, 3});
    Rng rng(8);
    CHECK(sample(EnsembleSpec::deterministic(m).with_transpose(), rng) == m.transpose());
}

TEST_CASE("moment report for uniform(0,1)") {
    const auto r = moment_report(ScalarDistribution::uniform(0.0, 1.0), 0.5);
    CHECK(r.pos_moment == doctest::Approx(oracle::kUniform01Tau05Moment).epsilon(1e-14));
    REQUIRE(r.density_bound.has_value());
    CHECK(*r.density_bound == 1.0);
    CHECK(r.neg_moment_bound == doctest::Approx(oracle::kUniform01Tau05Bound).epsilon(1e-14));
    REQUIRE(r.optimal_epsilon.has_value());
    CHECK(*r.optimal_epsilon == doctest::Approx(oracle::kUniform01Tau05Epsilon).epsilon(1e-14));
}

TEST_CASE("moment report closed forms against quadrature") {
    CHECK(moment_report(ScalarDistribution::uniform(-1.0, 2.0), 0.3).pos_moment ==
          doctest::Approx(oracle::kUniformM1P2Tau03Moment).epsilon(1e-12));
    CHECK(moment_report(ScalarDistribution::uniform(-1.0, 2.0), 0.25).neg_moment_bound ==
          doctest::Approx(oracle::kUniformWidth3Tau025Bound).epsilon(1e-12));
    CHECK(moment_report(ScalarDistribution::gaussian(0.0, 1.0), 0.5).pos_moment ==
          doctest::Approx(oracle::kGauss01Tau05Moment).epsilon(1e-12));
    CHECK(moment_report(ScalarDistribution::gaussian(1.0, 2.0), 0.3).pos_moment ==
          doctest::Approx(oracle::kGauss12Tau03Moment).epsilon(1e-12));
    CHECK(moment_report(ScalarDistribution::gaussian(-3.0, 0.5), 0.7).pos_moment ==
          doctest::Approx(oracle::kGaussM3Half07Moment).epsilon(1e-12));
    const auto g = moment_report(ScalarDistribution::gaussian(0.0, 1.0), 0.5);
    CHECK(g.neg_moment_bound == doctest::Approx(oracle::kGauss01Tau05Bound).epsilon(1e-12));
    CHECK(*g.optimal_epsilon == doctest::Approx(oracle::kGauss01Tau05Epsilon).epsilon(1e-12));
}

TEST_CASE("empirical gaussian moment matches the closed form") {
    const auto dist = ScalarDistribution::gaussian(1.0, 2.0);
    Rng rng(10);
    const int n = 100000;
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = std::pow(std::abs(dist.draw(rng)), 0.3);
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - moment_report(dist, 0.3).pos_moment) < 3.0 * se);
}

TEST_CASE("moment report for two-point and error paths") {
    const auto r = moment_report(ScalarDistribution::two_point(0.5), 0.5);
    CHECK(r.pos_moment == 1.0);
    CHECK(std::isinf(r.neg_moment_bound));
    CHECK_FALSE(r.density_bound.has_value());
    CHECK_THROWS_WITH_AS(moment_report(ScalarDistribution::uniform(0.0, 1.0), 1.0),
                         doctest::Contains("negative-moment bound requires tau < 1"), DomainError);
    CHECK_THROWS_AS(moment_report(ScalarDistribution::uniform(0.0, 1.0), 0.0), DomainError);
    CHECK_NOTHROW(moment_report(ScalarDistribution::two_point(0.5), 2.0));
}

TEST_CASE("support contains an open set") {
    CHECK(support_open_set(ScalarDistribution::uniform(0.0, 1.0)));
    CHECK(support_open_set(ScalarDistribution::gaussian(0.0, 1.0)));
    CHECK_FALSE(support_open_set(ScalarDistribution::two_point(0.5)));
}

TEST_CASE("isotropic contracting witness") {
    Rng rng(11);
    CHECK(isotropic_contracting_witness(EnsembleSpec::deterministic(SquareMatrix::diagonal({2.0, 1.0})), rng));
    CHECK_FALSE(isotropic_contracting_witness(EnsembleSpec::deterministic(SquareMatrix::rotation(0.3)), rng));
    CHECK(isotropic_contracting_witness(EnsembleSpec::isotropic_gaussian(3, 1.0), rng, 10));
}

TEST_CASE("condition check verdicts") {
    Rng rng(12);
    const auto u = condition_check(EnsembleSpec::iid(ScalarDistribution::uniform(0.0, 1.0), 3), 0.5, rng);
    CHECK(u.verdict == Verdict::pass);
    CHECK(u.support_open_set == true);
    CHECK(u.pos_moment_finite == true);
    REQUIRE(u.neg_moment_bound.has_value());
    CHECK(*u.neg_moment_bound == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(u.moment_tau == 0.5);

    const auto t = condition_check(EnsembleSpec::iid(ScalarDistribution::two_point(0.5), 3), 0.5, rng);
    CHECK(t.verdict == Verdict::fail);
    CHECK(t.support_open_set == false);
    REQUIRE(t.neg_moment_bound.has_value());
    CHECK(std::isinf(*t.neg_moment_bound));

    const auto r = condition_check(EnsembleSpec::deterministic(SquareMatrix::rotation(0.3)), 0.5, rng);
    CHECK(r.verdict == Verdict::fail);
    CHECK(r.verdict_text.find("not contracting") != std::string::npos);

    const auto f = condition_check(
        EnsembleSpec::fixed_set({SquareMatrix::diagonal({2.0, 1.0}), SquareMatrix::rotation(0.5)}, {0.5, 0.5}), 0.5,
        rng);
    CHECK(f.verdict == Verdict::unknown);
    CHECK(f.verdict_text.find("unknown") != std::string::npos);

    const auto tagged = [] {
        auto s = EnsembleSpec::fixed_set({SquareMatrix::diagonal({2.0, 1.0}), SquareMatrix::rotation(0.5)}, {0.5, 0.5});
        s.isotropic_tag = true;
        return s;
    }();
    CHECK(condition_check(tagged, 0.5, rng).verdict == Verdict::pass);
    CHECK(condition_check(EnsembleSpec::isotropic_gaussian(3, 1.0), 0.5, rng).verdict == Verdict::pass);
}

TEST_CASE("condition check with tau >= 1 leaves the density bound unknown") {
    Rng rng(13);
    const auto r = condition_check(EnsembleSpec::iid(ScalarDistribution::uniform(0.0, 1.0), 3), 1.5, rng);
    CHECK_FALSE(r.neg_moment_bound.has_value());
    CHECK(r.verdict == Verdict::unknown);
}

TEST_CASE("ensemble config round trip") {
    const std::vector<EnsembleSpec> specs = {
        EnsembleSpec::iid(ScalarDistribution::uniform(-0.5, 2.0), 4),
        EnsembleSpec::iid(ScalarDistribution::gaussian(0.1, 0.7), 3),
        EnsembleSpec::iid(ScalarDistribution::two_point(0.3), 2),
        EnsembleSpec::isotropic_gaussian(5, 1.3).with_transpose(),
        EnsembleSpec::fixed_set({SquareMatrix::diagonal({2.0, 1.0}), SquareMatrix::rotation(0.1)}, {0.4, 0.6}),
        EnsembleSpec::deterministic(SquareMatrix(2, {1.0 / 3.0, 2, -1, 0.1})),
    };
    for (const auto& s : specs) {
        const auto back = EnsembleSpec::from_section(s.to_section());
        CHECK(back.hash() == s.hash());
        CHECK(back.to_section().entries() == s.to_section().entries());
    }
    CHECK(specs[0].hash() != specs[1].hash());
}

TEST_CASE("ensemble config errors") {
    auto parse = [](const std::string& text) {
        return EnsembleSpec::from_section(ConfigFile::parse(text).section("ensemble"));
    };
    CHECK_THROWS_WITH_AS(parse("[ensemble]\nkind = isotropic_gaussian\n"), doctest::Contains("dim"), ConfigError);
    CHECK_THROWS_WITH_AS(parse("[ensemble]\nkind = isotropic_gaussian\ndim = 2\ncolor = red\n"),
                         doctest::Contains("line 4"), ConfigError);
    CHECK_THROWS_AS(parse("[ensemble]\nkind = isotropic_gaussian\ndim = 13\n"), ConfigError);
    CHECK_THROWS_AS(parse("[ensemble]\nkind = blob\ndim = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse("[ensemble]\nkind = iid_entries\ndim = 2\nfamily = uniform\na = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[ensemble]\nkind = iid_entries\ndim = 2\nfamily = uniform\na = 1\nb = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[ensemble]\nkind = deterministic\ndim = 2\nmatrix = 1, 2, 3\n"), ConfigError);
    CHECK_THROWS_AS(parse("[ensemble]\nkind = isotropic_gaussian\ndim = 2\nprob = 0.5\n"), ConfigError);
}
