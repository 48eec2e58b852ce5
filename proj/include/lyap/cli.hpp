#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lyap/config.hpp"
#include "lyap/ensembles.hpp"
#include "lyap/experiments.hpp"

namespace lyap::cli {

inline constexpr const char* kCodeVersion = "lyaplab 1.0.0";

enum ExitCode : int {
    kOk = 0,
    kConfigError = 1,
    kUnknownCondition = 2,
    kConditionFailed = 3,
    kTrustDegraded = 4,
};

struct RunSettings {
    std::size_t n_max = 400;
    std::size_t trajectories = 200;
    std::size_t checkpoint_stride = 0;  // 0 = ceil(n_max / 40)
    std::uint64_t master_seed = 0;
    std::size_t max_p = 0;              // 0 = largest p within the exterior cap
    std::vector<double> r_list = {0.25, 0.5, 1.0};
    double tau = kDefaultTau;
    std::vector<std::size_t> fixed_probes = {1, 2};
    std::size_t random_probes = 1;
    std::size_t pilot_trajectories = 100;
    double alpha = 0.5;
    double beta = 0.5;
    std::size_t burn_in = 0;            // 0 = 50 d
    std::size_t atoms = 10000;
    std::size_t furstenberg_samples = 100000;
    std::size_t contraction_n = 20;
    std::size_t pair_count = 64;
    std::size_t pair_trials = 256;
    std::size_t probe_count = 64;
};

struct OutputSettings {
    std::string directory = ".";
    bool jsonl = true;
    bool csv = true;
    bool timing = false;  // keep wall_time in records (breaks byte identity)
};

/// Parsed [ensemble], [run] and [output] sections. A [manifest] section is
/// accepted and ignored so manifests can be fed back as configs.
struct RunConfig {
    EnsembleSpec ensemble;
    RunSettings run;
    OutputSettings output;

    /// Throws ConfigError naming section, key and line.
    static RunConfig from_file(const ConfigFile& file);
    /// Every effective key, defaults included, except output.directory.
    ConfigFile effective() const;
    TrajectoryOptions trajectory_options() const;
};

/// Runs `lyaplab <args...>` in-process; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string format_report(const ConditionReport& report);

}  // namespace lyap::cli
