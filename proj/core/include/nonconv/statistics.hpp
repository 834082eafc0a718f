#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace nonconv {

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            compensation_ += (sum_ - t) + x;
        else
            compensation_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

double compensated_sum(std::span<const double> values);

// Welford mean and unbiased variance.
class RunningMoments {
public:
    void add(double x) noexcept {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

double normal_cdf(double x);
// 1 - Phi(x), accurate in the upper tail.
double normal_sf(double x);
double normal_quantile(double p);

struct Interval {
    double lower = 0.0;
    double upper = 1.0;
};

// Exact two-sided binomial interval for count successes out of trials.
Interval clopper_pearson(std::size_t count, std::size_t trials, double confidence = 0.95);

// sup_x |F_hat(x) - Phi(x)| for (samples - center) / scale, evaluated at both sides of every step.
double kolmogorov_distance(std::span<const double> samples, double center, double scale);

struct JackknifeResult {
    double estimate = 0.0;
    double standard_error = 0.0;
};

// Bootstrap standard error and percentile interval of a statistic over resamples of the data.
struct BootstrapResult {
    double estimate = 0.0;
    double standard_error = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

// `statistic` receives resample counts (multiplicity of each datum) so callers can avoid
// materializing resamples. Deterministic for a fixed seed.
BootstrapResult bootstrap(std::size_t n, const std::function<double(std::span<const std::uint32_t>)>& statistic,
                          std::size_t resamples, std::uint64_t seed, double confidence = 0.95);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double intercept_se = 0.0;
    double slope_se = 0.0;
    std::vector<double> residuals;
};

// Weighted least squares y ~ intercept + slope x; standard errors treat 1/w as the known variances.
LinearFit weighted_least_squares(std::span<const double> x, std::span<const double> y, std::span<const double> w);
// Weighted fit through the origin, y ~ slope x.
LinearFit weighted_least_squares_origin(std::span<const double> x, std::span<const double> y, std::span<const double> w);
// Ordinary least squares with residual-based standard errors.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace nonconv
