#include "nonconv/statistics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "nonconv/errors.hpp"
#include "nonconv/rng.hpp"

namespace nonconv {

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

double compensated_sum(std::span<const double> values) {
    CompensatedSum s;
    for (double v : values) s.add(v);
    return s.value();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

Interval clopper_pearson(std::size_t count, std::size_t trials, double confidence) {
    if (trials == 0) throw DomainError("binomial interval needs at least one trial");
    if (count > trials) throw DomainError("count exceeds trials");
    const double alpha = 1.0 - confidence;
    const auto k = static_cast<double>(count);
    const auto n = static_cast<double>(trials);
    Interval ci;
    ci.lower = count == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1.0, alpha / 2.0);
    ci.upper = count == trials ? 1.0 : boost::math::ibeta_inv(k + 1.0, n - k, 1.0 - alpha / 2.0);
    return ci;
}

double kolmogorov_distance(std::span<const double> samples, double center, double scale) {
    if (!(scale > 0.0)) throw DomainError("standardization scale must be positive");
    if (samples.empty()) throw DomainError("no samples");
    std::vector<double> z(samples.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (samples[i] - center) / scale;
    std::sort(z.begin(), z.end());
    const auto n = static_cast<double>(z.size());
    double worst = 0.0;
    std::size_t i = 0;
    while (i < z.size()) {
        std::size_t j = i;
        while (j < z.size() && z[j] == z[i]) ++j;
        const double phi = normal_cdf(z[i]);
        worst = std::max({worst, phi - static_cast<double>(i) / n, static_cast<double>(j) / n - phi});
        i = j;
    }
    return worst;
}

BootstrapResult bootstrap(std::size_t n, const std::function<double(std::span<const std::uint32_t>)>& statistic,
                          std::size_t resamples, std::uint64_t seed, double confidence) {
    if (n == 0 || resamples < 2) throw DomainError("bootstrap needs data and at least two resamples");
    std::vector<std::uint32_t> counts(n, 1);
    BootstrapResult result;
    result.estimate = statistic(counts);
    std::vector<double> replicates(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        std::fill(counts.begin(), counts.end(), 0U);
        CounterStream rng(stream_key(seed, b));
        for (std::size_t t = 0; t < n; ++t) {
            const auto pick = static_cast<std::size_t>((static_cast<u128>(rng()) * n) >> 64);
            ++counts[pick];
        }
        replicates[b] = statistic(counts);
    }
    RunningMoments m;
    for (double v : replicates) m.add(v);
    result.standard_error = std::sqrt(m.variance());
    std::sort(replicates.begin(), replicates.end());
    const double alpha = 1.0 - confidence;
    auto at = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::clamp(std::floor(q * static_cast<double>(resamples)), 0.0,
                                                             static_cast<double>(resamples - 1)));
        return replicates[idx];
    };
    result.lower = at(alpha / 2.0);
    result.upper = at(1.0 - alpha / 2.0);
    return result;
}

namespace {

void check_fit_input(std::span<const double> x, std::span<const double> y, std::span<const double> w, std::size_t min_points) {
    if (x.size() != y.size() || x.size() != w.size()) throw DomainError("fit inputs differ in length");
    if (x.size() < min_points) throw DomainError("too few points for a fit");
    for (double v : w)
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("fit weights must be positive and finite");
}

}  // namespace

LinearFit weighted_least_squares(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    check_fit_input(x, y, w, 2);
    CompensatedSum sw, sx, sy, sxx, sxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw.add(w[i]);
        sx.add(w[i] * x[i]);
        sy.add(w[i] * y[i]);
        sxx.add(w[i] * x[i] * x[i]);
        sxy.add(w[i] * x[i] * y[i]);
    }
    const double det = sw.value() * sxx.value() - sx.value() * sx.value();
    if (!(det > 0.0)) throw DomainError("degenerate fit design");
    LinearFit fit;
    fit.slope = (sw.value() * sxy.value() - sx.value() * sy.value()) / det;
    fit.intercept = (sxx.value() * sy.value() - sx.value() * sxy.value()) / det;
    fit.slope_se = std::sqrt(sw.value() / det);
    fit.intercept_se = std::sqrt(sxx.value() / det);
    for (std::size_t i = 0; i < x.size(); ++i) fit.residuals.push_back(y[i] - fit.intercept - fit.slope * x[i]);
    return fit;
}

LinearFit weighted_least_squares_origin(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    check_fit_input(x, y, w, 1);
    CompensatedSum sxx, sxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx.add(w[i] * x[i] * x[i]);
        sxy.add(w[i] * x[i] * y[i]);
    }
    if (!(sxx.value() > 0.0)) throw DomainError("degenerate fit design");
    LinearFit fit;
    fit.slope = sxy.value() / sxx.value();
    fit.slope_se = std::sqrt(1.0 / sxx.value());
    for (std::size_t i = 0; i < x.size(); ++i) fit.residuals.push_back(y[i] - fit.slope * x[i]);
    return fit;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    const std::vector<double> ones(x.size(), 1.0);
    LinearFit fit = weighted_least_squares(x, y, ones);
    if (x.size() > 2) {
        double rss = 0.0;
        for (double r : fit.residuals) rss += r * r;
        const double s2 = rss / static_cast<double>(x.size() - 2);
        fit.slope_se *= std::sqrt(s2);
        fit.intercept_se *= std::sqrt(s2);
    } else {
        fit.slope_se = fit.intercept_se = 0.0;
    }
    return fit;
}

}  // namespace nonconv
