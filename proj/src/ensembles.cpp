#include "lyap/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include "lyap/error.hpp"
#include "lyap/linalg.hpp"

namespace lyap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

std::string matrix_to_list(const SquareMatrix& m) {
    return join_doubles(Vector(m.row_major().begin(), m.row_major().end()));
}

SquareMatrix matrix_from_list(const std::string& text, std::size_t dim, const std::string& what) {
    std::vector<double> values;
    try {
        values = parse_double_list(text);
    } catch (const ConfigError& e) {
        throw ConfigError(what + ": " + e.what());
    }
    if (values.size() != dim * dim) {
        throw ConfigError(what + ": expected " + std::to_string(dim * dim) + " row-major entries, got " +
                          std::to_string(values.size()));
    }
    return SquareMatrix(dim, std::move(values));
}

}  // namespace

ScalarDistribution ScalarDistribution::uniform(double a, double b) {
    ScalarDistribution d{Family::uniform, a, b};
    d.validate();
    return d;
}

ScalarDistribution ScalarDistribution::gaussian(double mean, double sd) {
    ScalarDistribution d{Family::gaussian, mean, sd};
    d.validate();
    return d;
}

ScalarDistribution ScalarDistribution::two_point(double prob) {
    ScalarDistribution d{Family::two_point, prob, 0.0};
    d.validate();
    return d;
}

void ScalarDistribution::validate() const {
    switch (family) {
        case Family::uniform:
            if (!(first < second)) throw ConfigError("uniform(a, b) requires a < b");
            break;
        case Family::gaussian:
            if (!(second > 0.0)) throw ConfigError("gaussian(mean, sd) requires sd > 0");
            break;
        case Family::two_point:
            if (!(first > 0.0 && first < 1.0)) throw ConfigError("two_point(prob) requires prob in (0, 1)");
            break;
    }
}

double ScalarDistribution::draw(Rng& rng) const {
    switch (family) {
        case Family::uniform:
            return rng.uniform(first, second);
        case Family::gaussian:
            return rng.normal(first, second);
        case Family::two_point:
            return rng.bernoulli(first) ? 1.0 : -1.0;
    }
    return 0.0;
}

std::string ScalarDistribution::describe() const {
    std::ostringstream os;
    switch (family) {
        case Family::uniform:
            os << "uniform(" << format_double(first) << ", " << format_double(second) << ")";
            break;
        case Family::gaussian:
            os << "gaussian(" << format_double(first) << ", " << format_double(second) << ")";
            break;
        case Family::two_point:
            os << "two_point(+-1, " << format_double(first) << ")";
            break;
    }
    return os.str();
}

std::string to_string(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::iid_entries:
            return "iid_entries";
        case EnsembleKind::isotropic_gaussian:
            return "isotropic_gaussian";
        case EnsembleKind::fixed_set:
            return "fixed_set";
        case EnsembleKind::deterministic:
            return "deterministic";
    }
    return "?";
}

std::string to_string(Family family) {
    switch (family) {
        case Family::uniform:
            return "uniform";
        case Family::gaussian:
            return "gaussian";
        case Family::two_point:
            return "two_point";
    }
    return "?";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass:
            return "pass";
        case Verdict::unknown:
            return "unknown";
        case Verdict::fail:
            return "fail";
    }
    return "?";
}

EnsembleSpec EnsembleSpec::iid(ScalarDistribution dist, std::size_t dim) {
    EnsembleSpec s;
    s.kind = EnsembleKind::iid_entries;
    s.dim = dim;
    s.entries = dist;
    s.validate();
    return s;
}

EnsembleSpec EnsembleSpec::isotropic_gaussian(std::size_t dim, double sd) {
    EnsembleSpec s;
    s.kind = EnsembleKind::isotropic_gaussian;
    s.dim = dim;
    s.sd = sd;
    s.validate();
    return s;
}

EnsembleSpec EnsembleSpec::fixed_set(std::vector<SquareMatrix> matrices, std::vector<double> probabilities) {
    EnsembleSpec s;
    s.kind = EnsembleKind::fixed_set;
    s.dim = matrices.empty() ? 0 : matrices.front().dim();
    s.matrices = std::move(matrices);
    s.probabilities = std::move(probabilities);
    s.validate();
    return s;
}

EnsembleSpec EnsembleSpec::deterministic(SquareMatrix m) {
    EnsembleSpec s;
    s.kind = EnsembleKind::deterministic;
    s.dim = m.dim();
    s.matrices = {std::move(m)};
    s.validate();
    return s;
}

void EnsembleSpec::validate() const {
    if (kind == EnsembleKind::fixed_set && matrices.empty()) {
        throw ConfigError("fixed_set ensemble needs at least one matrix");
    }
    if (dim < kMinDim || dim > kMaxDim) {
        throw ConfigError("ensemble dimension " + std::to_string(dim) + " outside [" + std::to_string(kMinDim) +
                          ", " + std::to_string(kMaxDim) + "]");
    }
    switch (kind) {
        case EnsembleKind::iid_entries:
            entries.validate();
            break;
        case EnsembleKind::isotropic_gaussian:
            if (!(sd > 0.0)) throw ConfigError("isotropic_gaussian requires sd > 0");
            break;
        case EnsembleKind::fixed_set: {
            if (probabilities.size() != matrices.size()) {
                throw ConfigError("fixed_set: " + std::to_string(matrices.size()) + " matrices but " +
                                  std::to_string(probabilities.size()) + " probabilities");
            }
            double total = 0.0;
            for (double p : probabilities) {
                if (!(p >= 0.0)) throw ConfigError("fixed_set: probabilities must be nonnegative");
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-12) throw ConfigError("fixed_set: probabilities must sum to 1");
            [[fallthrough]];
        }
        case EnsembleKind::deterministic:
            if (matrices.size() != 1 && kind == EnsembleKind::deterministic) {
                throw ConfigError("deterministic ensemble holds exactly one matrix");
            }
            for (const auto& m : matrices) {
                if (m.dim() != dim) throw ConfigError("ensemble matrix dimension does not match dim");
                const Vector s = singular_values(m);
                if (!(s.back() > s.front() * 1e-14)) throw ConfigError("ensemble matrix is not invertible");
            }
            break;
    }
}

EnsembleSpec EnsembleSpec::with_transpose(bool on) const {
    EnsembleSpec s = *this;
    s.transposed = on;
    return s;
}

const std::vector<std::string>& EnsembleSpec::section_keys() {
    static const std::vector<std::string> keys = {"kind", "dim",         "family", "a",      "b",
                                                  "mean", "sd",          "prob",   "matrix", "matrices",
                                                  "probabilities", "isotropic_tag", "transpose"};
    return keys;
}

ConfigSection EnsembleSpec::to_section() const {
    ConfigSection s("ensemble");
    s.set("kind", to_string(kind));
    s.set("dim", std::to_string(dim));
    switch (kind) {
        case EnsembleKind::iid_entries:
            s.set("family", to_string(entries.family));
            if (entries.family == Family::uniform) {
                s.set("a", format_double(entries.first));
                s.set("b", format_double(entries.second));
            } else if (entries.family == Family::gaussian) {
                s.set("mean", format_double(entries.first));
                s.set("sd", format_double(entries.second));
            } else {
                s.set("prob", format_double(entries.first));
            }
            break;
        case EnsembleKind::isotropic_gaussian:
            s.set("sd", format_double(sd));
            break;
        case EnsembleKind::fixed_set: {
            std::string list;
            for (std::size_t i = 0; i < matrices.size(); ++i) list += (i ? "; " : "") + matrix_to_list(matrices[i]);
            s.set("matrices", list);
            s.set("probabilities", join_doubles(probabilities));
            break;
        }
        case EnsembleKind::deterministic:
            s.set("matrix", matrix_to_list(matrices.front()));
            break;
    }
    if (kind == EnsembleKind::fixed_set || kind == EnsembleKind::deterministic) {
        s.set("isotropic_tag", isotropic_tag ? "true" : "false");
    }
    s.set("transpose", transposed ? "true" : "false");
    return s;
}

EnsembleSpec EnsembleSpec::from_section(const ConfigSection& sec) {
    sec.reject_unknown(section_keys());
    EnsembleSpec s;
    const std::string kind = sec.require("kind");
    const std::int64_t dim = sec.get_int("dim");
    if (dim < static_cast<std::int64_t>(kMinDim) || dim > static_cast<std::int64_t>(kMaxDim)) {
        throw ConfigError("[ensemble] dim: " + std::to_string(dim) + " outside [2, 12]");
    }
    s.dim = static_cast<std::size_t>(dim);
    s.transposed = sec.get_bool("transpose", false);
    std::vector<std::string> allowed = {"kind", "dim", "transpose"};
    if (kind == "iid_entries") {
        s.kind = EnsembleKind::iid_entries;
        const std::string family = sec.require("family");
        allowed.push_back("family");
        if (family == "uniform") {
            s.entries = {Family::uniform, sec.get_double("a"), sec.get_double("b")};
            allowed.insert(allowed.end(), {"a", "b"});
        } else if (family == "gaussian") {
            s.entries = {Family::gaussian, sec.get_double("mean", 0.0), sec.get_double("sd")};
            allowed.insert(allowed.end(), {"mean", "sd"});
        } else if (family == "two_point") {
            s.entries = {Family::two_point, sec.get_double("prob", 0.5), 0.0};
            allowed.push_back("prob");
        } else {
            throw ConfigError("[ensemble] family: unknown family '" + family + "'");
        }
    } else if (kind == "isotropic_gaussian") {
        s.kind = EnsembleKind::isotropic_gaussian;
        s.sd = sec.get_double("sd", 1.0);
        allowed.push_back("sd");
    } else if (kind == "fixed_set") {
        s.kind = EnsembleKind::fixed_set;
        std::istringstream in(sec.require("matrices"));
        std::string item;
        while (std::getline(in, item, ';')) s.matrices.push_back(matrix_from_list(item, s.dim, "[ensemble] matrices"));
        s.probabilities = sec.get_doubles("probabilities");
        s.isotropic_tag = sec.get_bool("isotropic_tag", false);
        allowed.insert(allowed.end(), {"matrices", "probabilities", "isotropic_tag"});
    } else if (kind == "deterministic") {
        s.kind = EnsembleKind::deterministic;
        s.matrices = {matrix_from_list(sec.require("matrix"), s.dim, "[ensemble] matrix")};
        s.isotropic_tag = sec.get_bool("isotropic_tag", false);
        allowed.insert(allowed.end(), {"matrix", "isotropic_tag"});
    } else {
        throw ConfigError("[ensemble] kind: unknown ensemble kind '" + kind + "'");
    }
    sec.reject_unknown(allowed);
    s.validate();
    return s;
}

std::string EnsembleSpec::hash() const {
    ConfigFile f;
    f.section_or_add("ensemble") = to_section();
    const std::string text = f.to_string();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SquareMatrix sample(const EnsembleSpec& spec, Rng& rng, std::size_t& resamples) {
    const std::size_t d = spec.dim;
    if ((spec.kind == EnsembleKind::fixed_set || spec.kind == EnsembleKind::deterministic) && spec.matrices.empty()) {
        throw ConfigError("fixed_set ensemble needs at least one matrix");
    }
    SquareMatrix m;
    switch (spec.kind) {
        case EnsembleKind::deterministic:
            m = spec.matrices.front();
            break;
        case EnsembleKind::fixed_set: {
            const double u = rng.uniform(0.0, 1.0);
            double acc = 0.0;
            std::size_t pick = spec.matrices.size() - 1;
            for (std::size_t i = 0; i < spec.probabilities.size(); ++i) {
                acc += spec.probabilities[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
            m = spec.matrices[pick];
            break;
        }
        case EnsembleKind::iid_entries:
        case EnsembleKind::isotropic_gaussian: {
            const ScalarDistribution dist = spec.kind == EnsembleKind::iid_entries
                                                ? spec.entries
                                                : ScalarDistribution{Family::gaussian, 0.0, spec.sd};
            std::vector<double> values(d * d);
            while (true) {
                for (double& x : values) x = dist.draw(rng);
                m = SquareMatrix(d, values);
                if (determinant(m) != 0.0) break;
                ++resamples;
            }
            break;
        }
    }
    return spec.transposed ? m.transpose() : m;
}

SquareMatrix sample(const EnsembleSpec& spec, Rng& rng) {
    std::size_t ignored = 0;
    return sample(spec, rng, ignored);
}

MomentReport moment_report(const ScalarDistribution& dist, double tau) {
    if (!(tau > 0.0)) throw DomainError("moment_report: tau must be positive");
    dist.validate();
    MomentReport r;
    switch (dist.family) {
        case Family::uniform: {
            const double a = dist.first;
            const double b = dist.second;
            auto antiderivative = [tau](double x) {
                return std::copysign(std::pow(std::abs(x), tau + 1.0), x) / (tau + 1.0);
            };
            r.pos_moment = (antiderivative(b) - antiderivative(a)) / (b - a);
            r.density_bound = 1.0 / (b - a);
            break;
        }
        case Family::gaussian: {
            const double mean = dist.first;
            const double sd = dist.second;
            // E|N(mean, sd^2)|^tau = sd^tau 2^(tau/2) Gamma((tau+1)/2)/sqrt(pi) 1F1(-tau/2; 1/2; -mean^2/(2 sd^2))
            const double centred = std::pow(sd, tau) * std::pow(2.0, tau / 2.0) *
                                   boost::math::tgamma((tau + 1.0) / 2.0) / std::sqrt(kPi);
            const double z = -(mean * mean) / (2.0 * sd * sd);
            r.pos_moment = centred * (z == 0.0 ? 1.0 : boost::math::hypergeometric_1F1(-tau / 2.0, 0.5, z));
            r.density_bound = 1.0 / (sd * std::sqrt(2.0 * kPi));
            break;
        }
        case Family::two_point:
            r.pos_moment = 1.0;
            r.neg_moment_bound = kInf;
            return r;
    }
    if (!(tau < 1.0)) throw DomainError("negative-moment bound requires tau < 1");
    const double k = *r.density_bound;
    const double eps = tau / (2.0 * k);
    r.optimal_epsilon = eps;
    r.neg_moment_bound = k * 2.0 * std::pow(eps, 1.0 - tau) / (1.0 - tau) + std::pow(eps, -tau);
    return r;
}

bool support_open_set(const ScalarDistribution& dist) { return dist.family != Family::two_point; }

bool isotropic_contracting_witness(const EnsembleSpec& spec, Rng& rng, std::size_t draws) {
    auto not_orthogonal = [](const SquareMatrix& m) { return !is_scaled_orthogonal(m, 1e-6); };
    switch (spec.kind) {
        case EnsembleKind::iid_entries:
            throw DomainError("isotropic_contracting_witness: iid_entries ensembles are not isotropic");
        case EnsembleKind::isotropic_gaussian:
            for (std::size_t i = 0; i < draws; ++i)
                if (not_orthogonal(sample(spec, rng))) return true;
            return false;
        case EnsembleKind::fixed_set:
        case EnsembleKind::deterministic:
            return std::any_of(spec.matrices.begin(), spec.matrices.end(), not_orthogonal);
    }
    return false;
}

namespace {

std::string yes_no(std::optional<bool> b) {
    if (!b) return "n/a";
    return *b ? "yes" : "no";
}

}  // namespace

ConditionReport condition_check(const EnsembleSpec& spec, double tau, Rng& rng) {
    spec.validate();
    ConditionReport rep;
    rep.moment_tau = tau;
    std::ostringstream text;
    text << "ensemble: " << to_string(spec.kind) << " (d = " << spec.dim << ")\n";
    text << "tau: " << format_double(tau) << "\n";

    // i.i.d. entries with open support and two-sided moments.
    std::optional<Verdict> iid_route;
    std::optional<ScalarDistribution> entry_law;
    if (spec.kind == EnsembleKind::iid_entries) entry_law = spec.entries;
    if (spec.kind == EnsembleKind::isotropic_gaussian) entry_law = ScalarDistribution{Family::gaussian, 0.0, spec.sd};
    if (entry_law) {
        rep.support_open_set = support_open_set(*entry_law);
        text << "entry law: " << entry_law->describe() << "\n";
        text << "support contains an open set: " << yes_no(rep.support_open_set) << "\n";
        std::string bound_note;
        try {
            const MomentReport m = moment_report(*entry_law, tau);
            rep.pos_moment = m.pos_moment;
            rep.pos_moment_finite = std::isfinite(m.pos_moment);
            rep.neg_moment_bound = m.neg_moment_bound;
            text << "E|xi|^tau = " << format_double(m.pos_moment) << "\n";
            if (std::isinf(m.neg_moment_bound)) {
                text << "sup_a E|xi-a|^-tau: infinite (law has atoms)\n";
            } else {
                text << "sup_a E|xi-a|^-tau <= " << format_double(m.neg_moment_bound)
                     << " (density bound K = " << format_double(*m.density_bound)
                     << ", eps = " << format_double(*m.optimal_epsilon) << ")\n";
            }
        } catch (const DomainError& e) {
            bound_note = e.what();
            rep.pos_moment_finite = true;
            text << "sup_a E|xi-a|^-tau: unknown (" << bound_note << ")\n";
        }
        const bool any_false = rep.support_open_set == false || rep.pos_moment_finite == false ||
                               (rep.neg_moment_bound && std::isinf(*rep.neg_moment_bound));
        if (any_false) {
            iid_route = Verdict::fail;
        } else if (rep.neg_moment_bound) {
            iid_route = Verdict::pass;
        } else {
            iid_route = Verdict::unknown;
        }
    }

    // Isotropic route: a non-orthogonal normalized matrix plus closure under
    // orthogonal conjugation.
    std::optional<Verdict> isotropic;
    bool all_isometries = false;
    if (spec.kind != EnsembleKind::iid_entries) {
        rep.isotropic_contracting_witness = isotropic_contracting_witness(spec, rng);
        const bool conj_closed = spec.kind == EnsembleKind::isotropic_gaussian || spec.isotropic_tag;
        text << "normalized factor not orthogonal: " << yes_no(rep.isotropic_contracting_witness) << "\n";
        text << "closed under orthogonal conjugation: " << (conj_closed ? "yes" : "not asserted") << "\n";
        if (spec.kind != EnsembleKind::isotropic_gaussian) {
            all_isometries = !*rep.isotropic_contracting_witness;
            // Finite support: E exp(tau * ell) is automatically finite.
            rep.pos_moment_finite = true;
        }
        if (conj_closed) isotropic = *rep.isotropic_contracting_witness ? Verdict::pass : Verdict::fail;
    }

    if (all_isometries) {
        rep.verdict = Verdict::fail;
        text << "verdict: fail, not contracting (every factor is a scaled isometry, index d)\n";
    } else if (iid_route == Verdict::pass || isotropic == Verdict::pass) {
        rep.verdict = Verdict::pass;
        text << "verdict: pass, "
             << (iid_route == Verdict::pass ? "i.i.d.-entry sufficient conditions hold"
                                            : "isotropic sufficient condition holds")
             << "; p-strongly irreducible and p-contracting for all p\n";
    } else if (iid_route == Verdict::fail || isotropic == Verdict::fail) {
        rep.verdict = Verdict::fail;
        text << "verdict: fail, a sufficient condition is violated\n";
    } else {
        rep.verdict = Verdict::unknown;
        text << "verdict: unknown, no implemented sufficient criterion applies\n";
    }
    rep.verdict_text = text.str();
    return rep;
}

}  // namespace lyap
