#include "qdecay/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "qdecay/error.hpp"

namespace qdecay::stats {

namespace {

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double mean_of(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value() / static_cast<double>(xs.size());
}

struct Central {
    double mean, m2, m3, m4;
};

Central central_moments(std::span<const double> xs) {
    const double mean = mean_of(xs);
    CompensatedSum s2, s3, s4;
    for (double x : xs) {
        const double d = x - mean;
        const double d2 = d * d;
        s2.add(d2);
        s3.add(d2 * d);
        s4.add(d2 * d2);
    }
    const auto n = static_cast<double>(xs.size());
    return {mean, s2.value() / n, s3.value() / n, s4.value() / n};
}

} // namespace

double ks_distance(std::span<const double> samples, const Cdf& cdf, const Cdf& cdf_left) {
    if (samples.empty()) throw Error(ErrorCode::EmptySamples, "ks_distance needs at least one sample");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    double worst = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double x = sorted[i];
        const double right = cdf(x);
        const double left = cdf_left ? cdf_left(x) : right;
        worst = std::max({worst, std::abs(static_cast<double>(j) / n - right),
                          std::abs(static_cast<double>(i) / n - left)});
        i = j;
    }
    return std::min(worst, 1.0);
}

EcdfResult ecdf(std::span<const double> samples, const Cdf& cdf) {
    EcdfResult out;
    out.sorted_samples.assign(samples.begin(), samples.end());
    std::sort(out.sorted_samples.begin(), out.sorted_samples.end());
    if (cdf) out.ks_distance = ks_distance(out.sorted_samples, cdf);
    return out;
}

double ks_threshold(std::size_t n) {
    return 2.5 * 1.36 / std::sqrt(static_cast<double>(n));
}

std::uint64_t Histogram::total() const {
    std::uint64_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

Histogram histogram(std::span<const double> samples, double lo, double hi, std::size_t n_bins) {
    if (n_bins < 1) throw Error(ErrorCode::BadRange, "n_bins must be >= 1");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw Error(ErrorCode::BadRange, "need finite lo < hi");
    }
    Histogram h{lo, hi, std::vector<std::uint64_t>(n_bins, 0), 0, 0};
    const double scale = static_cast<double>(n_bins) / (hi - lo);
    for (double x : samples) {
        if (x < lo) {
            ++h.underflow;
        } else if (x > hi || std::isnan(x)) {
            ++h.overflow;
        } else {
            const auto bin = static_cast<std::size_t>((x - lo) * scale);
            ++h.counts[std::min(bin, n_bins - 1)];
        }
    }
    return h;
}

MeanVar mean_var_se(std::span<const double> samples) {
    if (samples.size() < 2) throw Error(ErrorCode::TooFewSamples, "need at least two samples");
    const double mean = mean_of(samples);
    CompensatedSum ss;
    for (double x : samples) ss.add((x - mean) * (x - mean));
    const auto n = static_cast<double>(samples.size());
    const double var = ss.value() / (n - 1.0);
    return {mean, var, std::sqrt(var / n)};
}

Moments moments(std::span<const double> samples) {
    if (samples.size() < 2) throw Error(ErrorCode::TooFewSamples, "need at least two samples");
    const auto n = static_cast<double>(samples.size());
    const Central c = central_moments(samples);
    const double var = c.m2 * n / (n - 1.0);
    Moments m;
    m.mean = c.mean;
    m.stddev = std::sqrt(var);
    m.se_mean = std::sqrt(var / n);
    m.se_stddev = c.m2 > 0.0 ? std::sqrt(std::max(0.0, c.m4 - c.m2 * c.m2) / (4.0 * c.m2 * n)) : 0.0;
    m.excess_kurtosis = c.m2 > 0.0 ? c.m4 / (c.m2 * c.m2) - 3.0 : 0.0;
    return m;
}

KurtosisEstimate excess_kurtosis(std::span<const double> samples, std::size_t n_batches) {
    if (n_batches < 2 || samples.size() < 4 * n_batches) {
        throw Error(ErrorCode::TooFewSamples, "need at least 4 samples per batch");
    }
    auto kurt = [](std::span<const double> xs) {
        const Central c = central_moments(xs);
        return c.m2 > 0.0 ? c.m4 / (c.m2 * c.m2) - 3.0 : 0.0;
    };
    std::vector<double> batch_values;
    const std::size_t per = samples.size() / n_batches;
    for (std::size_t b = 0; b < n_batches; ++b) {
        batch_values.push_back(kurt(samples.subspan(b * per, per)));
    }
    const MeanVar spread = mean_var_se(batch_values);
    return {kurt(samples), spread.standard_error};
}

double chi_square_sf(double statistic, double dof) {
    if (dof <= 0.0) return 1.0;
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

ChiSquare chi_square(std::span<const std::uint64_t> observed, std::span<const double> expected,
                     std::size_t fitted_params) {
    if (observed.size() != expected.size()) {
        throw Error(ErrorCode::BadRange, "observed and expected differ in length");
    }
    ChiSquare out;
    std::size_t used = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) continue;
        const double d = static_cast<double>(observed[i]) - expected[i];
        out.statistic += d * d / expected[i];
        ++used;
    }
    if (used < 2 + fitted_params) throw Error(ErrorCode::TooFewSamples, "too few usable bins");
    out.dof = used - 1 - fitted_params;
    out.p_value = chi_square_sf(out.statistic, static_cast<double>(out.dof));
    return out;
}

SpectrumResult power_spectrum(std::span<const double> zeta, double dt) {
    if (zeta.size() < 2) throw Error(ErrorCode::SeriesTooShort, "need at least two lags");
    if (!(dt > 0.0)) throw Error(ErrorCode::BadRange, "dt must be positive");
    const std::size_t k_lags = zeta.size();
    const auto m_total = static_cast<double>(2 * k_lags - 1);
    SpectrumResult out;
    out.frequencies.resize(k_lags);
    out.power.resize(k_lags);
    for (std::size_t m = 0; m < k_lags; ++m) {
        double acc = zeta[0];
        for (std::size_t k = 1; k < k_lags; ++k) {
            const double window = 1.0 - static_cast<double>(k) / static_cast<double>(k_lags);
            acc += 2.0 * window * zeta[k] *
                   std::cos(2.0 * std::numbers::pi * static_cast<double>(m * k) / m_total);
        }
        out.frequencies[m] = static_cast<double>(m) / (m_total * dt);
        out.power[m] = std::max(0.0, acc * dt);
    }
    return out;
}

Autocorrelation autocorrelation(const std::vector<std::vector<double>>& series, std::size_t max_lag) {
    if (series.empty()) throw Error(ErrorCode::SeriesTooShort, "no series");
    const std::size_t len = series.front().size();
    for (const auto& s : series) {
        if (s.size() != len) throw Error(ErrorCode::SeriesTooShort, "series lengths differ");
    }
    if (len <= max_lag) {
        throw Error(ErrorCode::SeriesTooShort,
                    "length " + std::to_string(len) + " <= max_lag " + std::to_string(max_lag));
    }

    std::vector<std::vector<double>> fluct(series.size(), std::vector<double>(len));
    if (series.size() >= 2) {
        for (std::size_t t = 0; t < len; ++t) {
            CompensatedSum s;
            for (const auto& row : series) s.add(row[t]);
            const double mean = s.value() / static_cast<double>(series.size());
            for (std::size_t i = 0; i < series.size(); ++i) fluct[i][t] = series[i][t] - mean;
        }
    } else {
        const double mean = mean_of(series.front());
        for (std::size_t t = 0; t < len; ++t) fluct[0][t] = series[0][t] - mean;
    }

    Autocorrelation out;
    out.zeta.resize(max_lag + 1);
    out.se.resize(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        CompensatedSum sum, sum_sq;
        std::size_t count = 0;
        for (const auto& row : fluct) {
            for (std::size_t t = 0; t + k < len; ++t) {
                const double p = row[t] * row[t + k];
                sum.add(p);
                sum_sq.add(p * p);
                ++count;
            }
        }
        const auto n = static_cast<double>(count);
        const double mean = sum.value() / n;
        const double var = std::max(0.0, sum_sq.value() / n - mean * mean);
        out.zeta[k] = mean;
        out.se[k] = std::sqrt(var / n);
    }
    return out;
}

std::vector<std::size_t> autocorrelation_dips(const Autocorrelation& ac, double threshold_se) {
    std::vector<std::size_t> dips;
    const auto& z = ac.zeta;
    for (std::size_t k = 1; k < z.size(); ++k) {
        const bool left = z[k] < z[k - 1];
        const bool right = k + 1 >= z.size() || z[k] <= z[k + 1];
        if (left && right && z[k] < -threshold_se * ac.se[k]) dips.push_back(k);
    }
    return dips;
}

} // namespace qdecay::stats
