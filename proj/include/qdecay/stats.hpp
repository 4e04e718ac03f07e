#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace qdecay::stats {

using Cdf = std::function<double(double)>;

struct EcdfResult {
    std::vector<double> sorted_samples;
    double ks_distance = 0.0;
};

// sup_x |F_n(x) - F(x)| evaluated on both sides of every sample. When F has
// jumps, pass its left limit as `cdf_left`; otherwise F is taken continuous.
double ks_distance(std::span<const double> samples, const Cdf& cdf, const Cdf& cdf_left = {});
EcdfResult ecdf(std::span<const double> samples, const Cdf& cdf = {});

// Fixed acceptance threshold: 2.5 x the asymptotic 1% critical value 1.36 / sqrt(n).
double ks_threshold(std::size_t n);

struct Histogram {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::uint64_t> counts;
    std::uint64_t underflow = 0;
    std::uint64_t overflow = 0;

    double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
    double bin_center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
    // In-range samples only; underflow and overflow are kept apart.
    std::uint64_t total() const;
};

// Uniform bins over [lo, hi]; x == hi lands in the last bin, anything outside
// (including NaN, counted as overflow) goes to the sentinels.
Histogram histogram(std::span<const double> samples, double lo, double hi, std::size_t n_bins);

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;
    double standard_error = 0.0;
};

// Two-pass with compensated sums; unbiased variance.
MeanVar mean_var_se(std::span<const double> samples);

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
    double se_mean = 0.0;
    // Delta-method standard error of the sample standard deviation.
    double se_stddev = 0.0;
    double excess_kurtosis = 0.0;
};

Moments moments(std::span<const double> samples);

// Excess kurtosis with a batch-means standard error.
struct KurtosisEstimate {
    double value = 0.0;
    double se = 0.0;
};

KurtosisEstimate excess_kurtosis(std::span<const double> samples, std::size_t n_batches = 100);

struct ChiSquare {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
};

// Pearson statistic of observed counts against expected counts; bins with an
// expected count of zero are skipped. dof = bins used - 1 - fitted_params.
ChiSquare chi_square(std::span<const std::uint64_t> observed, std::span<const double> expected,
                     std::size_t fitted_params = 0);

double chi_square_sf(double statistic, double dof);

struct SpectrumResult {
    std::vector<double> frequencies;
    std::vector<double> power;
};

// Cosine transform of the symmetric extension of a one-sided autocorrelation
// zeta[0..K-1] (lag spacing dt) with a Bartlett lag window; small negative
// values left by the finite window are clamped to zero.
SpectrumResult power_spectrum(std::span<const double> zeta, double dt);

struct Autocorrelation {
    std::vector<double> zeta;
    std::vector<double> se;
};

// zeta[k] = <D(t) D(t + k)> averaged over every series and every time origin,
// where D is the input with the mean removed: per time index across the
// ensemble when there are at least two series, the time mean otherwise.
Autocorrelation autocorrelation(const std::vector<std::vector<double>>& series, std::size_t max_lag);

// Local minima of zeta[k], k >= 1, lying below -threshold_se * se[k].
std::vector<std::size_t> autocorrelation_dips(const Autocorrelation& ac, double threshold_se = 5.0);

} // namespace qdecay::stats
