#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lyap {

/// Monte Carlo estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Sample mean and standard error of the mean (zero for fewer than 2 values).
Estimate mean_stderr(std::span<const double> values);

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic critical value c(alpha) * sqrt((n + m) / (n m)); c = 1.63 at 1%.
double ks_critical_value(std::size_t n, std::size_t m, double c_alpha = 1.63);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace lyap
