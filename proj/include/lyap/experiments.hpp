#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lyap/ensembles.hpp"
#include "lyap/product.hpp"
#include "lyap/stats.hpp"

namespace lyap {

inline constexpr const char* kRecordSchema = "lyap.trajectory/1";

/// One probe evaluation at a checkpoint: log|<v1(n), w>| and log|<u1(n), w>|.
struct AlignmentSample {
    std::size_t n = 0;
    std::string probe;  // "e<k>" for fixed basis probes, "r<k>" for fresh random ones
    double log_v = 0.0;
    double log_u = 0.0;

    friend bool operator==(const AlignmentSample&, const AlignmentSample&) = default;
};

struct TrajectoryRecord {
    std::string spec_hash;
    std::uint64_t master_seed = 0;
    std::size_t trajectory_index = 0;
    std::size_t dim = 0;
    std::size_t max_p = 0;
    std::vector<SpectrumSnapshot> snapshots;
    std::vector<AlignmentSample> alignment_series;
    std::size_t resamples = 0;
    bool degraded = false;
    std::vector<std::string> errors;
    double wall_time = 0.0;  // seconds

    /// Smallest trusted p across snapshots.
    std::size_t trusted_p() const;

    /// NaN-aware; ignores wall_time.
    friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&);
};

struct TrajectoryOptions {
    std::size_t n_max = 400;
    std::size_t max_p = 1;
    std::size_t checkpoint_stride = 0;  // 0 selects default_checkpoint_stride(n_max)
    std::vector<std::size_t> fixed_probes = {1, 2};  // one-based basis indices
    std::size_t random_probes = 1;                    // fresh per checkpoint
};

/// Pushes n_max factors drawn from the child stream (master_seed, index).
/// Probes come from a separate child stream. Engine errors are recorded and the
/// trajectory continues where possible.
TrajectoryRecord run_trajectory(const EnsembleSpec& spec, const TrajectoryOptions& options, std::uint64_t master_seed,
                                std::size_t index);

/// Trajectories first_index .. first_index + count - 1, ordered by index.
/// Identical output for every worker count.
std::vector<TrajectoryRecord> run_batch(const EnsembleSpec& spec, const TrajectoryOptions& options,
                                        std::uint64_t master_seed, std::size_t count, std::size_t workers = 1,
                                        std::size_t first_index = 0);

/// (log_v, log_u) for probe w against the top directions. Exactly 0 when w
/// equals the direction, -inf when orthogonal.
std::pair<double, double> alignment_logs(const TopDirections& top, const Direction& probe);

struct SeriesPoint {
    std::size_t n = 0;
    double value = 0.0;
};

/// (log|lambda_p(n)| - log sigma_p(n)) / n^r per snapshot. Throws DomainError
/// when p lies outside the trusted range of the record.
std::vector<SeriesPoint> gap_statistic(const TrajectoryRecord& record, std::size_t p, double r);

struct AlignmentPoint {
    std::size_t n = 0;
    std::string probe;
    double v_stat = 0.0;  // log|<V_n e1, w>| / n^r
    double u_stat = 0.0;  // log|<U_n e1, w>| / n^r
};

std::vector<AlignmentPoint> alignment_statistic(const TrajectoryRecord& record, double r);

struct ExponentEstimate {
    std::size_t p = 0;
    std::size_t n = 0;
    Estimate gamma;
    Estimate delta;  // NaN when p is untrusted in some record
};

/// Terminal (1/n) log sigma_p and (1/n) log|lambda_p| across records.
/// Throws DomainError for fewer than 2 records or differing terminal n.
ExponentEstimate exponent_estimates(const std::vector<TrajectoryRecord>& records, std::size_t p);

struct KsMatch {
    double ks_distance = 0.0;
    std::size_t sample_count = 0;
    double critical_value = 0.0;  // 1% level, 1.63 sqrt(2/N)
};

inline constexpr std::size_t kMinCltRecords = 100;

/// KS distance between sqrt(n)((1/n) log sigma_1 - gamma1) and
/// sqrt(n)((1/n) log|lambda_1| - gamma1) at the common terminal n.
KsMatch clt_match(const std::vector<TrajectoryRecord>& records, double gamma1_hat);
KsMatch ks_match(const std::vector<double>& a, const std::vector<double>& b);

struct QuantileRow {
    std::size_t n = 0;
    double q05 = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double q95 = 0.0;
    double median_abs = 0.0;
};

struct GapSummary {
    std::size_t p = 0;
    double r = 0.0;
    std::vector<double> terminal;  // per trajectory, in index order
    std::vector<QuantileRow> rows;  // one per checkpoint
    double decay_slope = 0.0;      // of log median|gap| against log n
};

GapSummary summarize_gaps(const std::vector<TrajectoryRecord>& records, std::size_t p, double r);

struct AlignmentSummary {
    std::string probe;
    double r = 0.0;
    std::vector<double> terminal;  // |v statistic| at the terminal checkpoint
    std::vector<QuantileRow> rows;  // quantiles of the v statistic
};

/// Fixed probes are summarized by name; all random probes are pooled as "random".
std::vector<AlignmentSummary> summarize_alignment(const std::vector<TrajectoryRecord>& records, double r);

std::string gap_csv(const std::vector<GapSummary>& summaries);
std::string alignment_csv(const std::vector<AlignmentSummary>& summaries);
std::string exponent_csv(const std::vector<ExponentEstimate>& estimates);

std::string record_to_json(const TrajectoryRecord& record);
TrajectoryRecord record_from_json(const std::string& line, std::size_t line_number = 1);

/// JSON Lines, one record per line.
void persist(const std::vector<TrajectoryRecord>& records, const std::string& path);
/// Throws FormatError naming the offending line.
std::vector<TrajectoryRecord> load(const std::string& path);

}  // namespace lyap
