#include "lyap/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lyap/error.hpp"
#include "lyap/log.hpp"
#include "lyap/parallel.hpp"

namespace lyap {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same_double(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same_doubles(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_double(a[i], b[i])) return false;
    return true;
}

double log_abs_inner(const Vector& d, const Vector& w) {
    const double ip = std::abs(dot(d, w));
    if (ip < 0.5) return std::log(ip);
    const double s = norm2(wedge(d, w));
    return s == 0.0 ? 0.0 : 0.5 * std::log1p(-s * s);
}

std::vector<double> column_at(const std::vector<std::vector<SeriesPoint>>& series, std::size_t k) {
    std::vector<double> out;
    out.reserve(series.size());
    for (const auto& s : series) out.push_back(s[k].value);
    return out;
}

QuantileRow quantile_row(std::size_t n, const std::vector<double>& values) {
    std::vector<double> abs_values(values.size());
    std::transform(values.begin(), values.end(), abs_values.begin(), [](double x) { return std::abs(x); });
    return {n,
            quantile(values, 0.05),
            quantile(values, 0.25),
            quantile(values, 0.5),
            quantile(values, 0.75),
            quantile(values, 0.95),
            median(abs_values)};
}

const SpectrumSnapshot& terminal_of(const TrajectoryRecord& r) {
    if (r.snapshots.empty()) {
        throw DomainError("trajectory " + std::to_string(r.trajectory_index) + " has no snapshots");
    }
    return r.snapshots.back();
}

std::size_t common_terminal_n(const std::vector<TrajectoryRecord>& records) {
    const std::size_t n = terminal_of(records.front()).n;
    for (const auto& r : records) {
        if (terminal_of(r).n != n) {
            throw DomainError("records do not share a terminal n (" + std::to_string(n) + " vs " +
                              std::to_string(terminal_of(r).n) + ")");
        }
    }
    return n;
}

// JSON numbers cannot carry non-finite values; those travel as strings.
json encode(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

double decode(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return kNaN;
    }
    throw FormatError("expected a number, got " + j.dump());
}

json encode(const Vector& v) {
    json a = json::array();
    for (double x : v) a.push_back(encode(x));
    return a;
}

Vector decode_vector(const json& j) {
    Vector v;
    for (const auto& x : j) v.push_back(decode(x));
    return v;
}

std::string csv_row(std::initializer_list<std::string> cells) {
    std::string out;
    for (const auto& c : cells) {
        if (!out.empty()) out += ',';
        out += c;
    }
    return out + '\n';
}

std::string fmt(double x) { return format_double(x); }
std::string fmt(std::size_t x) { return std::to_string(x); }

}  // namespace

std::size_t TrajectoryRecord::trusted_p() const {
    if (snapshots.empty()) return 0;
    std::size_t t = max_p;
    for (const auto& s : snapshots) t = std::min(t, s.trusted_p);
    return t;
}

bool operator==(const TrajectoryRecord& a, const TrajectoryRecord& b) {
    if (a.snapshots.size() != b.snapshots.size() || a.alignment_series.size() != b.alignment_series.size()) return false;
    for (std::size_t i = 0; i < a.alignment_series.size(); ++i) {
        const auto& x = a.alignment_series[i];
        const auto& y = b.alignment_series[i];
        if (x.n != y.n || x.probe != y.probe || !same_double(x.log_v, y.log_v) || !same_double(x.log_u, y.log_u))
            return false;
    }
    for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
        const auto& x = a.snapshots[i];
        const auto& y = b.snapshots[i];
        if (!(x.n == y.n && same_doubles(x.log_sigmas, y.log_sigmas) &&
              same_doubles(x.log_eigen_moduli, y.log_eigen_moduli) && x.trusted_p == y.trusted_p &&
              x.u1.has_value() == y.u1.has_value() && x.v1.has_value() == y.v1.has_value() &&
              (!x.u1 || x.u1->vec == y.u1->vec) && (!x.v1 || x.v1->vec == y.v1->vec) &&
              x.direction_error == y.direction_error && same_double(x.log_abs_trace, y.log_abs_trace)))
            return false;
    }
    return a.spec_hash == b.spec_hash && a.master_seed == b.master_seed && a.trajectory_index == b.trajectory_index &&
           a.dim == b.dim && a.max_p == b.max_p && a.resamples == b.resamples && a.degraded == b.degraded &&
           a.errors == b.errors;
}

std::pair<double, double> alignment_logs(const TopDirections& top, const Direction& probe) {
    return {log_abs_inner(top.v1.vec, probe.vec), log_abs_inner(top.u1.vec, probe.vec)};
}

TrajectoryRecord run_trajectory(const EnsembleSpec& spec, const TrajectoryOptions& options, std::uint64_t master_seed,
                                std::size_t index) {
    spec.validate();
    const auto start = std::chrono::steady_clock::now();
    const std::size_t d = spec.dim;
    if (options.n_max == 0) throw DomainError("n_max must be positive");
    std::vector<Direction> fixed;
    for (std::size_t k : options.fixed_probes) {
        if (k < 1 || k > d) throw DomainError("fixed probe e" + std::to_string(k) + " outside dimension " + std::to_string(d));
        fixed.push_back(canonicalize(basis_vector(d, k - 1)));
    }

    TrajectoryRecord rec;
    rec.spec_hash = spec.hash();
    rec.master_seed = master_seed;
    rec.trajectory_index = index;
    rec.dim = d;
    rec.max_p = options.max_p;

    Rng factors = Rng::child(master_seed, index, Stream::factors);
    Rng probes = Rng::child(master_seed, index, Stream::probes);
    const std::size_t stride =
        options.checkpoint_stride == 0 ? default_checkpoint_stride(options.n_max) : options.checkpoint_stride;
    const auto schedule = checkpoint_schedule(options.n_max, stride);

    ScaledProduct sp(d, options.max_p);
    std::size_t next = 0;
    for (std::size_t step = 1; step <= options.n_max; ++step) {
        try {
            sp.push(sample(spec, factors, rec.resamples));
        } catch (const Error& e) {
            rec.errors.push_back("n=" + std::to_string(step) + ": " + e.what());
            rec.degraded = true;
            break;
        }
        if (step != schedule[next]) continue;
        ++next;
        try {
            SpectrumSnapshot snap = sp.snapshot(options.max_p);
            if (snap.trusted_p < options.max_p) rec.degraded = true;
            std::vector<Direction> random;
            for (std::size_t k = 0; k < options.random_probes; ++k) random.push_back(canonicalize(probes.unit_vector(d)));
            if (snap.u1 && snap.v1) {
                const TopDirections top{*snap.u1, *snap.v1};
                for (std::size_t k = 0; k < fixed.size(); ++k) {
                    const auto [lv, lu] = alignment_logs(top, fixed[k]);
                    rec.alignment_series.push_back({step, "e" + std::to_string(options.fixed_probes[k]), lv, lu});
                }
                for (std::size_t k = 0; k < random.size(); ++k) {
                    const auto [lv, lu] = alignment_logs(top, random[k]);
                    rec.alignment_series.push_back({step, "r" + std::to_string(k), lv, lu});
                }
            }
            rec.snapshots.push_back(std::move(snap));
        } catch (const Error& e) {
            rec.errors.push_back("n=" + std::to_string(step) + ": " + e.what());
        }
    }
    if (sp.accumulator_degraded()) rec.degraded = true;
    for (const auto& e : rec.errors) log::info("trajectory " + std::to_string(index) + ": " + e);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

std::vector<TrajectoryRecord> run_batch(const EnsembleSpec& spec, const TrajectoryOptions& options,
                                        std::uint64_t master_seed, std::size_t count, std::size_t workers,
                                        std::size_t first_index) {
    std::vector<TrajectoryRecord> out(count);
    parallel_for(count, workers,
                 [&](std::size_t i) { out[i] = run_trajectory(spec, options, master_seed, first_index + i); });
    return out;
}

std::vector<SeriesPoint> gap_statistic(const TrajectoryRecord& record, std::size_t p, double r) {
    const std::size_t trusted = record.trusted_p();
    if (p < 1 || p > trusted) {
        throw DomainError("gap_statistic: p = " + std::to_string(p) + " outside the trusted range [1, " +
                          std::to_string(trusted) + "]");
    }
    std::vector<SeriesPoint> out;
    out.reserve(record.snapshots.size());
    for (const auto& s : record.snapshots) {
        const double gap = s.log_eigen_moduli[p - 1] - s.log_sigmas[p - 1];
        out.push_back({s.n, gap / std::pow(static_cast<double>(s.n), r)});
    }
    return out;
}

std::vector<AlignmentPoint> alignment_statistic(const TrajectoryRecord& record, double r) {
    std::vector<AlignmentPoint> out;
    out.reserve(record.alignment_series.size());
    for (const auto& a : record.alignment_series) {
        const double scale = std::pow(static_cast<double>(a.n), r);
        out.push_back({a.n, a.probe, a.log_v / scale, a.log_u / scale});
    }
    return out;
}

ExponentEstimate exponent_estimates(const std::vector<TrajectoryRecord>& records, std::size_t p) {
    if (records.size() < 2) throw DomainError("exponent_estimates: need at least 2 records");
    const std::size_t n = common_terminal_n(records);
    const std::size_t d = records.front().dim;
    if (p < 1 || p > d) throw DomainError("exponent_estimates: p = " + std::to_string(p) + " outside [1, " + std::to_string(d) + "]");
    std::vector<double> g;
    std::vector<double> l;
    bool delta_ok = true;
    for (const auto& r : records) {
        const auto& s = terminal_of(r);
        g.push_back(s.log_sigmas[p - 1] / static_cast<double>(n));
        if (p <= r.trusted_p()) {
            l.push_back(s.log_eigen_moduli[p - 1] / static_cast<double>(n));
        } else {
            delta_ok = false;
        }
    }
    ExponentEstimate e;
    e.p = p;
    e.n = n;
    e.gamma = mean_stderr(g);
    e.delta = delta_ok ? mean_stderr(l) : Estimate{kNaN, kNaN};
    return e;
}

KsMatch ks_match(const std::vector<double>& a, const std::vector<double>& b) {
    return {ks_two_sample(a, b), a.size(), ks_critical_value(a.size(), b.size())};
}

KsMatch clt_match(const std::vector<TrajectoryRecord>& records, double gamma1_hat) {
    if (records.size() < kMinCltRecords) {
        throw DomainError("clt_match: need at least " + std::to_string(kMinCltRecords) + " records, got " +
                          std::to_string(records.size()));
    }
    const double n = static_cast<double>(common_terminal_n(records));
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& r : records) {
        const auto& s = terminal_of(r);
        a.push_back(std::sqrt(n) * (s.log_sigmas[0] / n - gamma1_hat));
        b.push_back(std::sqrt(n) * (s.log_eigen_moduli[0] / n - gamma1_hat));
    }
    return ks_match(a, b);
}

GapSummary summarize_gaps(const std::vector<TrajectoryRecord>& records, std::size_t p, double r) {
    if (records.empty()) throw DomainError("summarize_gaps: no records");
    std::vector<std::vector<SeriesPoint>> series;
    for (const auto& rec : records) series.push_back(gap_statistic(rec, p, r));
    const std::size_t count = series.front().size();
    for (const auto& s : series) {
        if (s.size() != count) throw DomainError("summarize_gaps: records have different checkpoint schedules");
    }
    GapSummary out;
    out.p = p;
    out.r = r;
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t n = series.front()[k].n;
        out.rows.push_back(quantile_row(n, column_at(series, k)));
        const double m = out.rows.back().median_abs;
        if (m > 0.0 && std::isfinite(m)) {
            lx.push_back(std::log(static_cast<double>(n)));
            ly.push_back(std::log(m));
        }
    }
    if (count > 0) out.terminal = column_at(series, count - 1);
    out.decay_slope = lx.size() >= 2 ? fit_slope(lx, ly) : kNaN;
    return out;
}

std::vector<AlignmentSummary> summarize_alignment(const std::vector<TrajectoryRecord>& records, double r) {
    // probe group -> n -> values
    std::map<std::string, std::map<std::size_t, std::vector<double>>> groups;
    std::map<std::string, std::vector<double>> terminal;
    for (const auto& rec : records) {
        if (rec.snapshots.empty()) continue;
        const std::size_t last = rec.snapshots.back().n;
        for (const auto& a : alignment_statistic(rec, r)) {
            const std::string group = a.probe.front() == 'r' ? "random" : a.probe;
            groups[group][a.n].push_back(a.v_stat);
            if (a.n == last) terminal[group].push_back(std::abs(a.v_stat));
        }
    }
    std::vector<AlignmentSummary> out;
    for (const auto& [name, by_n] : groups) {
        AlignmentSummary s;
        s.probe = name;
        s.r = r;
        s.terminal = terminal[name];
        for (const auto& [n, values] : by_n) s.rows.push_back(quantile_row(n, values));
        out.push_back(std::move(s));
    }
    return out;
}

std::string gap_csv(const std::vector<GapSummary>& summaries) {
    std::string out = "p,r,n,q05,q25,median,q75,q95,median_abs,decay_slope\n";
    for (const auto& s : summaries)
        for (const auto& row : s.rows)
            out += csv_row({fmt(s.p), fmt(s.r), fmt(row.n), fmt(row.q05), fmt(row.q25), fmt(row.median), fmt(row.q75),
                            fmt(row.q95), fmt(row.median_abs), fmt(s.decay_slope)});
    return out;
}

std::string alignment_csv(const std::vector<AlignmentSummary>& summaries) {
    std::string out = "probe,r,n,q05,q25,median,q75,q95,median_abs\n";
    for (const auto& s : summaries)
        for (const auto& row : s.rows)
            out += csv_row({s.probe, fmt(s.r), fmt(row.n), fmt(row.q05), fmt(row.q25), fmt(row.median), fmt(row.q75),
                            fmt(row.q95), fmt(row.median_abs)});
    return out;
}

std::string exponent_csv(const std::vector<ExponentEstimate>& estimates) {
    std::string out = "p,n,gamma_hat,gamma_stderr,delta_hat,delta_stderr\n";
    for (const auto& e : estimates)
        out += csv_row({fmt(e.p), fmt(e.n), fmt(e.gamma.value), fmt(e.gamma.std_error), fmt(e.delta.value),
                        fmt(e.delta.std_error)});
    return out;
}

std::string record_to_json(const TrajectoryRecord& r) {
    json snaps = json::array();
    for (const auto& s : r.snapshots) {
        snaps.push_back({{"n", s.n},
                         {"log_sigmas", encode(s.log_sigmas)},
                         {"log_eigen_moduli", encode(s.log_eigen_moduli)},
                         {"trusted_p", s.trusted_p},
                         {"u1", s.u1 ? encode(s.u1->vec) : json(nullptr)},
                         {"v1", s.v1 ? encode(s.v1->vec) : json(nullptr)},
                         {"direction_error", s.direction_error},
                         {"log_abs_trace", encode(s.log_abs_trace)}});
    }
    json align = json::array();
    for (const auto& a : r.alignment_series)
        align.push_back({{"n", a.n}, {"probe", a.probe}, {"log_v", encode(a.log_v)}, {"log_u", encode(a.log_u)}});
    json j = {{"schema", kRecordSchema},
              {"spec_hash", r.spec_hash},
              {"master_seed", r.master_seed},
              {"trajectory_index", r.trajectory_index},
              {"dim", r.dim},
              {"max_p", r.max_p},
              {"resamples", r.resamples},
              {"degraded", r.degraded},
              {"errors", r.errors},
              {"wall_time", encode(r.wall_time)},
              {"snapshots", std::move(snaps)},
              {"alignment_series", std::move(align)}};
    return j.dump();
}

TrajectoryRecord record_from_json(const std::string& line, std::size_t line_number) {
    const std::string where = "line " + std::to_string(line_number) + ": ";
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw FormatError(where + "malformed record (" + e.what() + ")");
    }
    try {
        const auto schema = j.at("schema").get<std::string>();
        if (schema != kRecordSchema) {
            throw FormatError(where + "schema '" + schema + "' does not match '" + kRecordSchema + "'");
        }
        TrajectoryRecord r;
        r.spec_hash = j.at("spec_hash").get<std::string>();
        r.master_seed = j.at("master_seed").get<std::uint64_t>();
        r.trajectory_index = j.at("trajectory_index").get<std::size_t>();
        r.dim = j.at("dim").get<std::size_t>();
        r.max_p = j.at("max_p").get<std::size_t>();
        r.resamples = j.at("resamples").get<std::size_t>();
        r.degraded = j.at("degraded").get<bool>();
        r.errors = j.at("errors").get<std::vector<std::string>>();
        r.wall_time = decode(j.at("wall_time"));
        for (const auto& s : j.at("snapshots")) {
            SpectrumSnapshot snap;
            snap.n = s.at("n").get<std::size_t>();
            snap.log_sigmas = decode_vector(s.at("log_sigmas"));
            snap.log_eigen_moduli = decode_vector(s.at("log_eigen_moduli"));
            snap.trusted_p = s.at("trusted_p").get<std::size_t>();
            if (!s.at("u1").is_null()) snap.u1 = Direction{decode_vector(s.at("u1"))};
            if (!s.at("v1").is_null()) snap.v1 = Direction{decode_vector(s.at("v1"))};
            snap.direction_error = s.at("direction_error").get<std::string>();
            snap.log_abs_trace = decode(s.at("log_abs_trace"));
            if (!r.snapshots.empty() && snap.n <= r.snapshots.back().n) {
                throw FormatError(where + "snapshots are not strictly increasing in n");
            }
            r.snapshots.push_back(std::move(snap));
        }
        for (const auto& a : j.at("alignment_series")) {
            r.alignment_series.push_back({a.at("n").get<std::size_t>(), a.at("probe").get<std::string>(),
                                          decode(a.at("log_v")), decode(a.at("log_u"))});
        }
        return r;
    } catch (const FormatError& e) {
        if (std::string(e.what()).rfind(where, 0) == 0) throw;
        throw FormatError(where + e.what());
    } catch (const json::exception& e) {
        throw FormatError(where + "bad record field (" + e.what() + ")");
    }
}

void persist(const std::vector<TrajectoryRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    for (const auto& r : records) out << record_to_json(r) << '\n';
    if (!out) throw Error("write failed for " + path);
}

std::vector<TrajectoryRecord> load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::vector<TrajectoryRecord> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json(line, number));
        } catch (const FormatError& e) {
            throw FormatError(path + ": " + e.what());
        }
    }
    return out;
}

}  // namespace lyap
