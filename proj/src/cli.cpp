#include "lyap/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "lyap/error.hpp"
#include "lyap/exterior.hpp"
#include "lyap/log.hpp"
#include "lyap/projective.hpp"

namespace lyap::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kGapThresholdFactor = 1.5;
constexpr double kAlignThresholdFactor = 1.25;

const std::vector<std::string> kRunKeys = {
    "n_max",         "trajectories", "checkpoint_stride", "master_seed",        "max_p",
    "r_list",        "tau",          "fixed_probes",      "random_probes",      "pilot_trajectories",
    "alpha",         "beta",         "burn_in",           "atoms",              "furstenberg_samples",
    "contraction_n", "pair_count",   "pair_trials",       "probe_count"};
const std::vector<std::string> kOutputKeys = {"directory", "formats", "timing"};

std::size_t positive(const ConfigSection& s, const std::string& key, std::size_t fallback) {
    const auto v = s.get_uint(key, fallback);
    if (v == 0) s.fail(key, "must be positive");
    return static_cast<std::size_t>(v);
}

std::size_t largest_max_p(std::size_t d) {
    std::size_t p = 1;
    while (p < d && binomial(d, p + 1) <= kExteriorCap) ++p;
    return p;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed for " + path.string());
}

struct Invocation {
    std::string command;
    std::string config_path;
    std::size_t workers = 1;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
};

class Runner {
public:
    Runner(Invocation inv, std::ostream& out) : inv_(std::move(inv)), out_(out) {}

    int execute() {
        cfg_ = RunConfig::from_file(ConfigFile::load(inv_.config_path));
        if (inv_.seed) cfg_.run.master_seed = *inv_.seed;
        dir_ = inv_.out_dir ? fs::path(*inv_.out_dir) : fs::path(cfg_.output.directory);
        fs::create_directories(dir_);
        Rng check_rng = Rng::child(cfg_.run.master_seed, 0, Stream::checks);
        report_ = condition_check(cfg_.ensemble, cfg_.run.tau, check_rng);
        log::info("condition check: " + to_string(report_.verdict) + " (" + report_.verdict_text + ")");

        int code = kOk;
        if (inv_.command == "check") code = check();
        else if (inv_.command == "spectrum") code = spectrum();
        else if (inv_.command == "gaps") code = gaps();
        else if (inv_.command == "align") code = align();
        else if (inv_.command == "clt") code = clt();
        else if (inv_.command == "measure") code = measure();
        else if (inv_.command == "pilot") code = pilot();
        else throw ConfigError("unknown command '" + inv_.command + "'");
        write_manifest();
        return code;
    }

private:
    int check() {
        const std::string text = format_report(report_);
        out_ << text;
        emit("check.txt", text);
        switch (report_.verdict) {
            case Verdict::pass: return kOk;
            case Verdict::unknown: return kUnknownCondition;
            case Verdict::fail: return kConditionFailed;
        }
        return kOk;
    }

    std::vector<TrajectoryRecord> trajectories(std::uint64_t seed, std::size_t count) {
        auto records = run_batch(cfg_.ensemble, cfg_.trajectory_options(), seed, count, inv_.workers);
        for (const auto& r : records) degraded_ = degraded_ || r.degraded;
        if (!cfg_.output.timing)
            for (auto& r : records) r.wall_time = 0.0;
        return records;
    }

    std::vector<TrajectoryRecord> main_records() {
        auto records = trajectories(cfg_.run.master_seed, cfg_.run.trajectories);
        if (cfg_.output.jsonl) {
            persist(records, (dir_ / "records.jsonl").string());
            outputs_.push_back("records.jsonl");
        }
        return records;
    }

    std::size_t trusted_p(const std::vector<TrajectoryRecord>& records) {
        std::size_t t = cfg_.trajectory_options().max_p;
        for (const auto& r : records) t = std::min(t, r.trusted_p());
        if (t < cfg_.trajectory_options().max_p) {
            log::warn("lifted eigen moduli trusted only up to p = " + std::to_string(t));
            degraded_ = true;
        }
        return t;
    }

    int finish() const { return degraded_ ? kTrustDegraded : kOk; }

    int spectrum() {
        const auto records = main_records();
        std::vector<ExponentEstimate> est;
        if (records.size() >= 2)
            for (std::size_t p = 1; p <= cfg_.ensemble.dim; ++p) est.push_back(exponent_estimates(records, p));
        else
            log::warn("spectrum: exponent estimates need at least 2 trajectories");
        const std::string csv = exponent_csv(est);
        out_ << csv;
        emit("exponents.csv", csv);
        return finish();
    }

    int gaps() {
        const auto records = main_records();
        std::vector<GapSummary> summaries;
        const std::size_t t = trusted_p(records);
        for (std::size_t p = 1; p <= t; ++p)
            for (double r : cfg_.run.r_list) summaries.push_back(summarize_gaps(records, p, r));
        emit("gaps.csv", gap_csv(summaries));
        out_ << "wrote " << summaries.size() << " gap summaries to " << (dir_ / "gaps.csv").string() << "\n";
        return finish();
    }

    int align() {
        const auto records = main_records();
        std::vector<AlignmentSummary> summaries;
        for (double r : cfg_.run.r_list)
            for (auto& s : summarize_alignment(records, r)) summaries.push_back(std::move(s));
        emit("alignment.csv", alignment_csv(summaries));
        out_ << "wrote " << summaries.size() << " alignment summaries to " << (dir_ / "alignment.csv").string()
             << "\n";
        return finish();
    }

    std::uint64_t pilot_seed() const { return Rng::child(cfg_.run.master_seed, 0, Stream::pilot).next(); }

    int clt() {
        const auto pilot = trajectories(pilot_seed(), cfg_.run.pilot_trajectories);
        const double gamma1 = exponent_estimates(pilot, 1).gamma.value;
        const auto records = main_records();
        const KsMatch m = clt_match(records, gamma1);
        const double n = static_cast<double>(records.front().snapshots.back().n);
        std::ostringstream samples;
        samples << "trajectory,sigma_fluctuation,lambda_fluctuation\n";
        for (const auto& r : records) {
            const auto& s = r.snapshots.back();
            samples << r.trajectory_index << ',' << format_double(std::sqrt(n) * (s.log_sigmas[0] / n - gamma1)) << ','
                    << format_double(std::sqrt(n) * (s.log_eigen_moduli[0] / n - gamma1)) << '\n';
        }
        emit("clt_samples.csv", samples.str());
        std::ostringstream summary;
        summary << "n,trajectories,pilot_trajectories,gamma1_pilot,ks_distance,critical_value_1pct,below_critical\n"
                << static_cast<std::size_t>(n) << ',' << m.sample_count << ',' << pilot.size() << ','
                << format_double(gamma1) << ',' << format_double(m.ks_distance) << ','
                << format_double(m.critical_value) << ',' << (m.ks_distance < m.critical_value ? "yes" : "no")
                << '\n';
        out_ << summary.str();
        emit("clt.csv", summary.str());
        return finish();
    }

    int measure() {
        const auto& run = cfg_.run;
        const std::size_t burn = run.burn_in == 0 ? default_burn_in(cfg_.ensemble.dim) : run.burn_in;
        const auto nu = estimate_invariant_measure(cfg_.ensemble, burn, run.atoms, run.master_seed, inv_.workers);
        emit("measure_atoms.csv", nu.to_csv());
        const Estimate g = furstenberg_gamma1(cfg_.ensemble, nu, run.furstenberg_samples, run.master_seed, inv_.workers);
        ContractionOptions copt;
        copt.trials = run.pair_trials;
        copt.workers = inv_.workers;
        const SupEstimate a = estimate_A(cfg_.ensemble, run.alpha, run.contraction_n, run.pair_count, run.master_seed, copt);
        const SupEstimate b = estimate_B(nu, run.beta, run.probe_count, run.master_seed);
        const double ks = invariance_ks(cfg_.ensemble, nu, run.master_seed);
        auto flag = [](const SupEstimate& s) { return std::string(s.infinite ? "infinite;" : "") + "lower_bound"; };
        std::ostringstream os;
        os << "# A and B are lower bounds of a sup: maxima over sampled direction pairs and probes\n"
           << "quantity,parameters,value,std_error,flag\n"
           << "gamma1_furstenberg,atoms=" << nu.size() << ";samples=" << run.furstenberg_samples << ','
           << format_double(g.value) << ',' << format_double(g.std_error) << ",\n"
           << "A,alpha=" << format_double(run.alpha) << ";n=" << run.contraction_n << ';'
           << "pairs=" << run.pair_count << ',' << format_double(a.value) << ",," << flag(a) << '\n'
           << "B,beta=" << format_double(run.beta) << ";probes=" << run.probe_count << ',' << format_double(b.value)
           << ",," << flag(b) << '\n'
           << "invariance_ks,atoms=" << nu.size() << ',' << format_double(ks) << ",,"
           << "reference=" << format_double(3.0 * 2.0 / std::sqrt(static_cast<double>(nu.size()))) << '\n';
        out_ << os.str();
        emit("measure.csv", os.str());
        return kOk;
    }

    int pilot() {
        const auto records = trajectories(cfg_.run.master_seed, cfg_.run.trajectories);
        ConfigFile thresholds;
        ConfigSection& s = thresholds.section_or_add("pilot");
        s.set("ensemble_hash", cfg_.ensemble.hash());
        s.set("master_seed", std::to_string(cfg_.run.master_seed));
        s.set("trajectories", std::to_string(records.size()));
        s.set("n_max", std::to_string(cfg_.run.n_max));
        s.set("gap_r", "1");
        s.set("gap_factor", format_double(kGapThresholdFactor));
        const std::size_t t = trusted_p(records);
        for (std::size_t p = 1; p <= t; ++p) {
            const GapSummary g = summarize_gaps(records, p, 1.0);
            std::vector<double> abs_terminal;
            for (double x : g.terminal) abs_terminal.push_back(std::abs(x));
            s.set("gap_median_p" + std::to_string(p), format_double(median(abs_terminal)));
            s.set("gap_threshold_p" + std::to_string(p), format_double(kGapThresholdFactor * median(abs_terminal)));
        }
        s.set("align_r", "0.5");
        s.set("align_factor", format_double(kAlignThresholdFactor));
        double worst = 0.0;
        for (const auto& a : summarize_alignment(records, 0.5)) {
            const double q95 = quantile(a.terminal, 0.95);
            s.set("align_q95_" + a.probe, format_double(q95));
            worst = std::max(worst, q95);
        }
        s.set("align_threshold", format_double(kAlignThresholdFactor * worst));
        const std::string text = thresholds.to_string();
        out_ << text;
        emit("pilot_thresholds.conf", text);
        return finish();
    }

    void emit(const std::string& name, const std::string& content) {
        write_file(dir_ / name, content);
        outputs_.push_back(name);
    }

    void write_manifest() {
        ConfigFile m = cfg_.effective();
        ConfigSection& s = m.section_or_add("manifest");
        s.set("command", inv_.command);
        s.set("code_version", kCodeVersion);
        s.set("spec_hash", cfg_.ensemble.hash());
        s.set("condition_verdict", to_string(report_.verdict));
        const auto opts = cfg_.trajectory_options();
        s.set("checkpoint_schedule", join_sizes(checkpoint_schedule(
                                         opts.n_max, opts.checkpoint_stride ? opts.checkpoint_stride
                                                                            : default_checkpoint_stride(opts.n_max))));
        if (inv_.command == "clt") s.set("pilot_seed", std::to_string(pilot_seed()));
        std::string files;
        for (const auto& o : outputs_) files += (files.empty() ? "" : ",") + o;
        s.set("outputs", files);
        write_file(dir_ / (inv_.command + ".manifest"), m.to_string());
    }

    Invocation inv_;
    std::ostream& out_;
    RunConfig cfg_;
    fs::path dir_;
    ConditionReport report_;
    std::vector<std::string> outputs_;
    bool degraded_ = false;
};

}  // namespace

RunConfig RunConfig::from_file(const ConfigFile& file) {
    file.reject_unknown_sections({"ensemble", "run", "output", "manifest"});
    RunConfig c;
    c.ensemble = EnsembleSpec::from_section(file.section("ensemble"));
    const std::size_t d = c.ensemble.dim;

    const ConfigSection& run = file.section("run");
    run.reject_unknown(kRunKeys);
    RunSettings& r = c.run;
    r.master_seed = run.get_uint("master_seed");
    r.n_max = positive(run, "n_max", r.n_max);
    r.trajectories = positive(run, "trajectories", r.trajectories);
    r.checkpoint_stride = static_cast<std::size_t>(run.get_uint("checkpoint_stride", 0));
    r.max_p = static_cast<std::size_t>(run.get_uint("max_p", 0));
    if (r.max_p > d) run.fail("max_p", "exceeds dim = " + std::to_string(d));
    if (r.max_p > largest_max_p(d))
        run.fail("max_p", "exterior lift exceeds the cap of " + std::to_string(kExteriorCap));
    r.r_list = run.get_doubles("r_list", r.r_list);
    if (r.r_list.empty()) run.fail("r_list", "needs at least one value");
    for (double x : r.r_list)
        if (!(x > 0.0)) run.fail("r_list", "values must be positive");
    r.tau = run.get_double("tau", r.tau);
    if (!(r.tau > 0.0)) run.fail("tau", "must be positive");
    if (run.has("fixed_probes")) {
        r.fixed_probes.clear();
        const std::string text = run.require("fixed_probes");
        if (!text.empty()) {
            for (double x : run.get_doubles("fixed_probes")) {
                if (x != std::floor(x) || x < 1.0 || x > static_cast<double>(d))
                    run.fail("fixed_probes", "entries must be basis indices in [1, " + std::to_string(d) + "]");
                r.fixed_probes.push_back(static_cast<std::size_t>(x));
            }
        }
    } else {
        r.fixed_probes.erase(std::remove_if(r.fixed_probes.begin(), r.fixed_probes.end(),
                                            [d](std::size_t k) { return k > d; }),
                             r.fixed_probes.end());
    }
    r.random_probes = static_cast<std::size_t>(run.get_uint("random_probes", r.random_probes));
    r.pilot_trajectories = positive(run, "pilot_trajectories", r.pilot_trajectories);
    r.alpha = run.get_double("alpha", r.alpha);
    if (!(r.alpha > 0.0 && r.alpha <= 1.0)) run.fail("alpha", "must lie in (0, 1]");
    r.beta = run.get_double("beta", r.beta);
    if (!(r.beta > 0.0)) run.fail("beta", "must be positive");
    r.burn_in = static_cast<std::size_t>(run.get_uint("burn_in", 0));
    r.atoms = positive(run, "atoms", r.atoms);
    r.furstenberg_samples = positive(run, "furstenberg_samples", r.furstenberg_samples);
    r.contraction_n = positive(run, "contraction_n", r.contraction_n);
    r.pair_count = positive(run, "pair_count", r.pair_count);
    r.pair_trials = positive(run, "pair_trials", r.pair_trials);
    r.probe_count = positive(run, "probe_count", r.probe_count);

    if (file.has("output")) {
        const ConfigSection& out = file.section("output");
        out.reject_unknown(kOutputKeys);
        c.output.directory = out.get("directory").value_or(c.output.directory);
        if (const auto formats = out.get("formats")) {
            c.output.csv = false;
            c.output.jsonl = false;
            std::istringstream in(*formats);
            std::string item;
            while (std::getline(in, item, ',')) {
                item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
                if (item == "csv") c.output.csv = true;
                else if (item == "jsonl") c.output.jsonl = true;
                else out.fail("formats", "unknown format '" + item + "' (expected csv, jsonl)");
            }
            if (!c.output.csv) out.fail("formats", "csv summaries cannot be disabled");
        }
        c.output.timing = out.get_bool("timing", false);
    }
    return c;
}

ConfigFile RunConfig::effective() const {
    ConfigFile f;
    f.section_or_add("ensemble") = ensemble.to_section();
    ConfigSection& r = f.section_or_add("run");
    r.set("n_max", std::to_string(run.n_max));
    r.set("trajectories", std::to_string(run.trajectories));
    r.set("checkpoint_stride", std::to_string(run.checkpoint_stride == 0 ? default_checkpoint_stride(run.n_max)
                                                                           : run.checkpoint_stride));
    r.set("master_seed", std::to_string(run.master_seed));
    r.set("max_p", std::to_string(trajectory_options().max_p));
    r.set("r_list", join_doubles(run.r_list));
    r.set("tau", format_double(run.tau));
    r.set("fixed_probes", join_sizes(run.fixed_probes));
    r.set("random_probes", std::to_string(run.random_probes));
    r.set("pilot_trajectories", std::to_string(run.pilot_trajectories));
    r.set("alpha", format_double(run.alpha));
    r.set("beta", format_double(run.beta));
    r.set("burn_in", std::to_string(run.burn_in == 0 ? default_burn_in(ensemble.dim) : run.burn_in));
    r.set("atoms", std::to_string(run.atoms));
    r.set("furstenberg_samples", std::to_string(run.furstenberg_samples));
    r.set("contraction_n", std::to_string(run.contraction_n));
    r.set("pair_count", std::to_string(run.pair_count));
    r.set("pair_trials", std::to_string(run.pair_trials));
    r.set("probe_count", std::to_string(run.probe_count));
    ConfigSection& o = f.section_or_add("output");
    o.set("formats", output.jsonl ? "csv,jsonl" : "csv");
    o.set("timing", output.timing ? "true" : "false");
    return f;
}

TrajectoryOptions RunConfig::trajectory_options() const {
    TrajectoryOptions o;
    o.n_max = run.n_max;
    o.max_p = run.max_p == 0 ? largest_max_p(ensemble.dim) : run.max_p;
    o.checkpoint_stride = run.checkpoint_stride;
    o.fixed_probes = run.fixed_probes;
    o.random_probes = run.random_probes;
    return o;
}

std::string format_report(const ConditionReport& r) {
    std::string text = r.verdict_text;
    if (text.empty() || text.back() != '\n') text += '\n';
    return text;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Products of i.i.d. random matrices: exponents, gaps, alignment and contraction diagnostics",
                 "lyaplab"};
    app.require_subcommand(1);
    Invocation inv;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"check", "check the sufficient conditions on the ensemble"},
        {"spectrum", "estimate Lyapunov and stability exponents"},
        {"gaps", "gap statistics between eigenvalue moduli and singular values"},
        {"align", "alignment of top singular directions with independent probes"},
        {"clt", "compare fluctuations of log sigma_1 and log |lambda_1|"},
        {"measure", "invariant measure, Furstenberg integral, contraction diagnostics"},
        {"pilot", "calibrate gap and alignment thresholds"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", inv.config_path, "config file")->required();
        sub->add_option("--workers", inv.workers, "parallel trajectories")->check(CLI::PositiveNumber);
        sub->add_option("--out", inv.out_dir, "output directory (overrides [output] directory)");
        sub->add_option("--seed", inv.seed, "override [run] master_seed");
        sub->callback([&inv, name = name] { inv.command = name; });
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kConfigError;
    }

    try {
        return Runner(inv, out).execute();
    } catch (const ConfigError& e) {
        err << "lyaplab: config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const FormatError& e) {
        err << "lyaplab: " << e.what() << '\n';
        return kConfigError;
    } catch (const NumericalError& e) {
        err << "lyaplab: numerical failure: " << e.what() << '\n';
        return kTrustDegraded;
    } catch (const std::exception& e) {
        err << "lyaplab: " << e.what() << '\n';
        return kConfigError;
    }
}

}  // namespace lyap::cli
