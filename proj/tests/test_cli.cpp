#include <doctest.h>

#include <filesystem>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lyap/cli.hpp"

namespace fs = std::filesystem;
using namespace lyap;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("lyap_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }

    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result lyaplab(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

const char* kIsotropic =
    "[ensemble]\nkind = isotropic_gaussian\ndim = 3\nsd = 1\n\n"
    "[run]\nmaster_seed = 5\nn_max = 60\ntrajectories = 16\nmax_p = 3\nr_list = 0.5, 1\n"
    "pilot_trajectories = 8\natoms = 200\nfurstenberg_samples = 2000\npair_count = 4\npair_trials = 16\n"
    "probe_count = 4\ncontraction_n = 5\n";

}  // namespace

TEST_CASE("check exit codes follow the verdict") {
    Scratch s("check");
    const auto uniform = s.write("u.conf", "[ensemble]\nkind = iid_entries\ndim = 3\nfamily = uniform\na = 0\nb = 1\n[run]\nmaster_seed = 1\n");
    auto r = lyaplab({"check", "--config", uniform, "--out", (s.dir / "u").string()});
    CHECK(r.code == cli::kOk);
    CHECK(r.out.find("pass") != std::string::npos);
    CHECK(fs::exists(s.dir / "u" / "check.txt"));
    CHECK(fs::exists(s.dir / "u" / "check.manifest"));

    const auto two = s.write("t.conf", "[ensemble]\nkind = iid_entries\ndim = 3\nfamily = two_point\nprob = 0.5\n[run]\nmaster_seed = 1\n");
    CHECK(lyaplab({"check", "--config", two, "--out", (s.dir / "t").string()}).code == cli::kConditionFailed);

    const auto diag = s.write("d.conf", "[ensemble]\nkind = deterministic\ndim = 2\nmatrix = 2, 0, 0, 1\n[run]\nmaster_seed = 1\n");
    CHECK(lyaplab({"check", "--config", diag, "--out", (s.dir / "d").string()}).code == cli::kUnknownCondition);
}

TEST_CASE("config errors exit with code 1 and name the key") {
    Scratch s("errors");
    const auto no_dim = s.write("a.conf", "[ensemble]\nkind = isotropic_gaussian\nsd = 1\n[run]\nmaster_seed = 1\n");
    auto r = lyaplab({"check", "--config", no_dim, "--out", s.dir.string()});
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("dim") != std::string::npos);

    const auto unknown = s.write("b.conf", "[ensemble]\nkind = isotropic_gaussian\ndim = 2\nsd = 1\n[run]\nmaster_seed = 1\nn_mux = 3\n");
    r = lyaplab({"gaps", "--config", unknown, "--out", s.dir.string()});
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("n_mux") != std::string::npos);
    CHECK(r.err.find("line 7") != std::string::npos);

    const auto no_seed = s.write("c.conf", "[ensemble]\nkind = isotropic_gaussian\ndim = 2\nsd = 1\n");
    CHECK(lyaplab({"check", "--config", no_seed, "--out", s.dir.string()}).code == cli::kConfigError);
    CHECK(lyaplab({"check", "--config", (s.dir / "missing.conf").string()}).code == cli::kConfigError);
    CHECK(lyaplab({"bogus", "--config", no_seed}).code == cli::kConfigError);
    CHECK(lyaplab({"gaps"}).code == cli::kConfigError);
    CHECK(lyaplab({"--help"}).code == cli::kOk);
}

TEST_CASE("reruns from the manifest are byte identical across worker counts") {
    Scratch s("rerun");
    const auto conf = s.write("iso.conf", kIsotropic);
    for (const std::string cmd : {"gaps", "align", "spectrum", "clt"}) {
        CAPTURE(cmd);
        std::string cfg = conf;
        if (cmd == "clt") {
            std::string text = kIsotropic;
            text.replace(text.find("trajectories = 16"), 17, "trajectories = 100");
            cfg = s.write("clt.conf", text);
        }
        const auto a = (s.dir / (cmd + "_a")).string();
        const auto b = (s.dir / (cmd + "_b")).string();
        REQUIRE(lyaplab({cmd, "--config", cfg, "--out", a, "--workers", "1"}).code == cli::kOk);
        const auto manifest = (fs::path(a) / (cmd + ".manifest")).string();
        REQUIRE(lyaplab({cmd, "--config", manifest, "--out", b, "--workers", "8"}).code == cli::kOk);
        std::size_t compared = 0;
        for (const auto& entry : fs::directory_iterator(a)) {
            const auto name = entry.path().filename();
            CAPTURE(name.string());
            REQUIRE(fs::exists(fs::path(b) / name));
            CHECK(slurp(entry.path()) == slurp(fs::path(b) / name));
            ++compared;
        }
        CHECK(compared >= 3);
    }
}

TEST_CASE("manifest records the run") {
    Scratch s("manifest");
    const auto conf = s.write("iso.conf", kIsotropic);
    REQUIRE(lyaplab({"gaps", "--config", conf, "--out", s.dir.string()}).code == cli::kOk);
    const auto m = ConfigFile::load((s.dir / "gaps.manifest").string());
    const auto& sec = m.section("manifest");
    CHECK(sec.require("command") == "gaps");
    CHECK(sec.require("code_version") == cli::kCodeVersion);
    CHECK(sec.require("spec_hash") == EnsembleSpec::isotropic_gaussian(3, 1.0).hash());
    CHECK(sec.require("outputs").find("gaps.csv") != std::string::npos);
    CHECK(sec.require("checkpoint_schedule").rfind("2,4,6", 0) == 0);
    CHECK(m.section("run").require("master_seed") == "5");
    CHECK(m.section("run").require("burn_in") == "150");
    const auto gaps = slurp(s.dir / "gaps.csv");
    CHECK(gaps.rfind("p,r,n,", 0) == 0);
    // 3 values of p, 2 values of r and 30 checkpoints.
    CHECK(std::count(gaps.begin(), gaps.end(), '\n') == 1 + 3 * 2 * 30);
}

TEST_CASE("deterministic diagonal spectrum table") {
    Scratch s("diag");
    const auto conf = s.write("d.conf", "[ensemble]\nkind = deterministic\ndim = 2\nmatrix = 2, 0, 0, 1\n[run]\nmaster_seed = 1\nn_max = 1000\ntrajectories = 4\n");
    REQUIRE(lyaplab({"spectrum", "--config", conf, "--out", s.dir.string()}).code == cli::kOk);
    std::istringstream rows(slurp(s.dir / "exponents.csv"));
    std::string line;
    std::getline(rows, line);
    CHECK(line == "p,n,gamma_hat,gamma_stderr,delta_hat,delta_stderr");
    const double expected[2] = {std::log(2.0), 0.0};
    for (int p = 0; p < 2; ++p) {
        REQUIRE(std::getline(rows, line));
        std::vector<double> cells;
        std::istringstream cs(line);
        std::string cell;
        while (std::getline(cs, cell, ',')) cells.push_back(std::stod(cell));
        REQUIRE(cells.size() == 6);
        CHECK(cells[0] == p + 1);
        CHECK(cells[1] == 1000);
        CHECK(std::abs(cells[2] - expected[p]) <= 1e-12);
        CHECK(cells[3] == 0.0);
        CHECK(std::abs(cells[4] - expected[p]) <= 1e-12);
    }
}

TEST_CASE("rotation gaps vanish") {
    Scratch s("rot");
    const auto conf = s.write("r.conf", "[ensemble]\nkind = deterministic\ndim = 2\nmatrix = 0.955336489125606, -0.29552020666134, 0.29552020666134, 0.955336489125606\n[run]\nmaster_seed = 1\nn_max = 100\ntrajectories = 2\nr_list = 0.25\n");
    const auto r = lyaplab({"gaps", "--config", conf, "--out", s.dir.string()});
    INFO(r.err);
    REQUIRE(r.code == cli::kOk);
    std::istringstream rows(slurp(s.dir / "gaps.csv"));
    std::string line;
    std::getline(rows, line);
    std::size_t count = 0;
    while (std::getline(rows, line)) {
        std::vector<double> cells;
        std::istringstream cs(line);
        std::string cell;
        while (std::getline(cs, cell, ',')) cells.push_back(std::stod(cell));
        REQUIRE(cells.size() == 10);
        for (std::size_t k = 3; k <= 8; ++k) CHECK(std::abs(cells[k]) <= 1e-12);
        ++count;
    }
    CHECK(count == 2 * checkpoint_schedule(100, default_checkpoint_stride(100)).size());
}

TEST_CASE("measure and pilot outputs") {
    Scratch s("measure");
    const auto conf = s.write("iso.conf", kIsotropic);
    REQUIRE(lyaplab({"measure", "--config", conf, "--out", s.dir.string(), "--workers", "2"}).code == cli::kOk);
    const auto m = slurp(s.dir / "measure.csv");
    CHECK(m.rfind("# A and B are lower bounds of a sup", 0) == 0);
    CHECK(slurp(s.dir / "measure_atoms.csv").rfind("x1,x2,x3\n", 0) == 0);
    REQUIRE(lyaplab({"pilot", "--config", conf, "--out", s.dir.string()}).code == cli::kOk);
    const auto p = ConfigFile::load((s.dir / "pilot_thresholds.conf").string());
    const auto& sec = p.section("pilot");
    for (const char* key : {"gap_threshold_p1", "gap_threshold_p2", "gap_threshold_p3", "align_threshold"})
        CHECK(sec.get_double(key) > 0.0);
}
