#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "lyap/config.hpp"
#include "lyap/error.hpp"
#include "lyap/parallel.hpp"
#include "lyap/rng.hpp"
#include "lyap/stats.hpp"

using namespace lyap;

TEST_CASE("config parsing") {
    const auto cfg = ConfigFile::parse(
        "# comment\n[run]\nn_max = 400  # trailing\nr_list = 0.25, 0.5,1\nflag = true\n\n[output]\ndirectory = out\n",
        "test.conf");
    const auto& run = cfg.section("run");
    CHECK(run.get_uint("n_max") == 400);
    CHECK(run.get_doubles("r_list") == std::vector<double>{0.25, 0.5, 1.0});
    CHECK(run.get_bool("flag"));
    CHECK(run.line_of("r_list") == 4);
    CHECK(run.get_double("missing", 2.5) == 2.5);
    CHECK(cfg.section("output").require("directory") == "out");
    CHECK_FALSE(cfg.has("ensemble"));
    CHECK_THROWS_WITH_AS(cfg.section("ensemble"), doctest::Contains("[ensemble]"), ConfigError);
}

TEST_CASE("config errors carry location") {
    CHECK_THROWS_WITH_AS(ConfigFile::parse("[a]\nx = 1\nx = 2\n", "f.conf"), doctest::Contains("f.conf:3"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("[a]\n[a]\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("x = 1\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("[a\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("[a]\njust words\n"), ConfigError);
    const auto cfg = ConfigFile::parse("[run]\nn = -3\nv = abc\nb = maybe\n");
    const auto& s = cfg.section("run");
    CHECK_THROWS_WITH_AS(s.get_uint("n"), doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_WITH_AS(s.get_double("v"), doctest::Contains("[run] v"), ConfigError);
    CHECK_THROWS_AS(s.get_bool("b"), ConfigError);
    CHECK_THROWS_WITH_AS(s.require("w"), doctest::Contains("missing"), ConfigError);
    CHECK_THROWS_WITH_AS(s.reject_unknown({"n", "v"}), doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("[zzz]\n").reject_unknown_sections({"run"}), ConfigError);
    CHECK_THROWS_AS(ConfigFile::load("/nonexistent/file.conf"), ConfigError);
}

TEST_CASE("config text round trip") {
    const auto cfg = ConfigFile::parse("[b]\nz = 1\ny = 2\n[a]\nk = v\n");
    const auto again = ConfigFile::parse(cfg.to_string());
    CHECK(again.to_string() == cfg.to_string());
    CHECK(again.section("b").require("y") == "2");
}

TEST_CASE("doubles format to the shortest round-trip text") {
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) {
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(join_doubles({1.0, 0.25}) == "1,0.25");
    CHECK(parse_double_list("1, 2.5 ,3") == std::vector<double>{1.0, 2.5, 3.0});
    CHECK_THROWS_AS(parse_double_list("1, x"), ConfigError);
}

TEST_CASE("child generators are reproducible and distinct") {
    Rng a = Rng::child(5, 3, Stream::factors);
    Rng b = Rng::child(5, 3, Stream::factors);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    std::set<std::uint64_t> firsts;
    for (std::uint64_t idx = 0; idx < 50; ++idx) {
        firsts.insert(Rng::child(5, idx, Stream::factors).next());
        firsts.insert(Rng::child(5, idx, Stream::probes).next());
        firsts.insert(Rng::child(6, idx, Stream::factors).next());
    }
    CHECK(firsts.size() == 150);
}

TEST_CASE("random unit vectors") {
    Rng rng(3);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto v = rng.unit_vector(3);
        double s = 0.0;
        for (double x : v) s += x * x;
        CHECK(std::abs(s - 1.0) < 1e-14);
        sum += v[0] * v[0];
    }
    // <w, e1>^2 has mean 1/3 and variance 4/45 under the uniform law on S^2.
    CHECK(std::abs(sum / n - 1.0 / 3.0) < 3.0 * std::sqrt(4.0 / 45.0 / n));
}

TEST_CASE("summary statistics") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    const auto e = mean_stderr(x);
    CHECK(e.value == 2.5);
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(quantile(x, 0.0) == 1.0);
    CHECK(quantile(x, 1.0) == 4.0);
    CHECK(quantile(x, 0.5) == 2.5);
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK_THROWS_AS(mean_stderr(std::vector<double>{}), DomainError);
    const std::vector<double> lx = {0.0, 1.0, 2.0};
    const std::vector<double> ly = {1.0, 3.0, 5.0};
    CHECK(fit_slope(lx, ly) == doctest::Approx(2.0));
}

TEST_CASE("two-sample Kolmogorov-Smirnov distance") {
    const std::vector<double> a = {0.1, 0.4, 0.7, 0.9};
    CHECK(ks_two_sample(a, a) == 0.0);
    std::vector<double> shifted;
    for (double v : a) shifted.push_back(v + 10.0);
    CHECK(ks_two_sample(a, shifted) == 1.0);
    CHECK(ks_two_sample({1.0, 2.0}, {1.5}) == doctest::Approx(0.5));
    CHECK(ks_critical_value(500, 500) == doctest::Approx(1.63 * std::sqrt(2.0 / 500)));
}

TEST_CASE("parallel_for visits every index once and rethrows the lowest failure") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    try {
        parallel_for(100, 4, [](std::size_t i) {
            if (i == 17 || i == 60) throw DomainError("index " + std::to_string(i));
        });
        FAIL("expected an exception");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()) == "index 17");
    }
}
