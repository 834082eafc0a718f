#include "nonconv/cumulants.hpp"

#include <algorithm>
#include <cmath>

#include "nonconv/errors.hpp"
#include "nonconv/statistics.hpp"

namespace nonconv {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_factorial(double k) { return std::lgamma(k + 1.0); }

long double binomial(std::size_t n, std::size_t k) {
    long double v = 1.0L;
    for (std::size_t j = 1; j <= k; ++j) v = v * static_cast<long double>(n - k + j) / static_cast<long double>(j);
    return v;
}

void check_order(std::size_t k) {
    if (k == 0) throw DomainError("need at least one moment or cumulant");
    if (k > max_exact_cumulant_order) throw DomainError("exact conversions support orders up to 16");
}

}  // namespace

std::vector<double> moments_to_cumulants(std::span<const double> moments) {
    const std::size_t kmax = moments.size();
    check_order(kmax);
    std::vector<long double> m(kmax + 1), g(kmax + 1);
    m[0] = 1.0L;
    for (std::size_t k = 1; k <= kmax; ++k) m[k] = moments[k - 1];
    for (std::size_t k = 1; k <= kmax; ++k) {
        long double acc = m[k];
        for (std::size_t j = 1; j < k; ++j) acc -= binomial(k - 1, j - 1) * g[j] * m[k - j];
        g[k] = acc;
    }
    return {g.begin() + 1, g.end()};
}

std::vector<double> cumulants_to_moments(std::span<const double> cumulants, bool centered) {
    const std::size_t kmax = cumulants.size();
    check_order(kmax);
    if (centered && std::abs(cumulants[0]) > 0.0) throw DomainError("centered moment formula requires Gamma_1 = 0");
    const std::size_t min_part = centered ? 2 : 1;
    std::vector<long double> factorial(kmax + 1, 1.0L);
    for (std::size_t j = 1; j <= kmax; ++j) factorial[j] = factorial[j - 1] * static_cast<long double>(j);

    std::vector<double> out(kmax);
    for (std::size_t p = 1; p <= kmax; ++p) {
        // Depth-first walk over compositions of p into parts >= min_part.
        long double total = 0.0L;
        struct Frame {
            std::size_t remaining;
            std::size_t parts;
            long double weight;  // prod Gamma_{k_j} / k_j!
        };
        std::vector<Frame> stack{{p, 0, 1.0L}};
        while (!stack.empty()) {
            const Frame f = stack.back();
            stack.pop_back();
            if (f.remaining == 0) {
                total += factorial[p] / factorial[f.parts] * f.weight;
                continue;
            }
            for (std::size_t part = min_part; part <= f.remaining; ++part) {
                const long double g = cumulants[part - 1];
                if (g == 0.0L) continue;
                stack.push_back({f.remaining - part, f.parts + 1, f.weight * g / factorial[part]});
            }
        }
        out[p - 1] = static_cast<double>(total);
    }
    return out;
}

CumulantVector exact_cumulants(std::span<const double> moments) {
    CumulantVector v;
    v.moments.assign(moments.begin(), moments.end());
    v.cumulants = moments_to_cumulants(moments);
    v.provenance = CumulantVector::Provenance::exact;
    return v;
}

namespace {

// k-statistics of orders 2..4 from sums of centered powers.
struct KStats {
    double k2, k3, k4;
};

KStats kstats(double n, double s2, double s3, double s4) {
    KStats k{};
    k.k2 = s2 / (n - 1.0);
    k.k3 = n * s3 / ((n - 1.0) * (n - 2.0));
    k.k4 = (n * (n + 1.0) * s4 - 3.0 * (n - 1.0) * s2 * s2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    return k;
}

}  // namespace

CumulantVector sample_cumulants(std::span<const double> samples, std::size_t k_max) {
    if (k_max == 0 || k_max > max_sample_cumulant_order) throw DomainError("sample cumulants support orders 1..8");
    const std::size_t count = samples.size();
    if (count < 10 * k_max || count < 10) throw DomainError("too few samples: need at least 10 per cumulant order");
    const auto n = static_cast<double>(count);

    CumulantVector out;
    out.provenance = CumulantVector::Provenance::sample;
    out.replicates = count;
    out.cumulants.assign(k_max, 0.0);
    out.moments.assign(k_max, 0.0);
    out.standard_errors.assign(k_max, std::numeric_limits<double>::quiet_NaN());

    const double mean = compensated_sum(samples) / n;
    const bool constant = std::all_of(samples.begin(), samples.end(), [&](double x) { return x == samples[0]; });
    if (constant) {
        out.cumulants[0] = samples[0];
        out.standard_errors[0] = 0.0;
        for (std::size_t k = 1; k <= std::min<std::size_t>(k_max, 4); ++k) out.standard_errors[k - 1] = 0.0;
        for (std::size_t k = 1; k <= k_max; ++k) out.moments[k - 1] = std::pow(samples[0], static_cast<double>(k));
        return out;
    }

    // Sums of powers of deviations from the mean, orders 1..8.
    std::vector<CompensatedSum> t(9);
    for (double x : samples) {
        const double d = x - mean;
        double p = d;
        for (std::size_t r = 1; r <= 8; ++r) {
            t[r].add(p);
            p *= d;
        }
    }
    std::vector<double> T(9, 0.0);
    for (std::size_t r = 1; r <= 8; ++r) T[r] = t[r].value();
    // Central sums about the exact sample mean (T[1] carries the rounding of the first pass).
    const double mu = T[1] / n;
    auto central = [&](std::size_t r) {
        double s = 0.0;
        for (std::size_t j = 0; j <= r; ++j) {
            const double tj = j == 0 ? n : T[j];
            s += static_cast<double>(binomial(r, j)) * tj * std::pow(-mu, static_cast<double>(r - j));
        }
        return s;
    };
    std::vector<double> S(9, 0.0);
    for (std::size_t r = 2; r <= 8; ++r) S[r] = central(r);

    out.cumulants[0] = mean + mu;
    const KStats full = kstats(n, S[2], S[3], S[4]);
    if (k_max >= 2) out.cumulants[1] = full.k2;
    if (k_max >= 3) out.cumulants[2] = full.k3;
    if (k_max >= 4) out.cumulants[3] = full.k4;
    if (k_max >= 5) {
        std::vector<double> central_moments(k_max, 0.0);
        for (std::size_t r = 2; r <= k_max; ++r) central_moments[r - 1] = S[r] / n;
        const auto plug = moments_to_cumulants(central_moments);
        for (std::size_t k = 5; k <= k_max; ++k) out.cumulants[k - 1] = plug[k - 1];
    }
    // Raw moments reported for reference.
    for (std::size_t k = 1; k <= k_max; ++k) {
        CompensatedSum s;
        for (double x : samples) s.add(std::pow(x, static_cast<double>(k)));
        out.moments[k - 1] = s.value() / n;
    }

    // Leave-one-out jackknife from the power sums.
    const std::size_t jk = std::min<std::size_t>(k_max, 4);
    if (count >= 5) {
        std::vector<RunningMoments> loo(jk + 1);
        const double m1 = n - 1.0;
        for (double x : samples) {
            const double d = x - mean;
            const double t1 = T[1] - d, t2 = T[2] - d * d, t3 = T[3] - d * d * d, t4 = T[4] - d * d * d * d;
            const double u = t1 / m1;
            const double s2 = t2 - m1 * u * u;
            const double s3 = t3 - 3.0 * u * t2 + 3.0 * u * u * t1 - m1 * u * u * u;
            const double s4 = t4 - 4.0 * u * t3 + 6.0 * u * u * t2 - 4.0 * u * u * u * t1 + m1 * u * u * u * u;
            const KStats k = kstats(m1, s2, s3, s4);
            loo[1].add(mean + u);
            if (jk >= 2) loo[2].add(k.k2);
            if (jk >= 3) loo[3].add(k.k3);
            if (jk >= 4) loo[4].add(k.k4);
        }
        for (std::size_t k = 1; k <= jk; ++k) {
            // Jackknife variance (n-1)/n sum (theta_j - theta_bar)^2 = (n-1)^2/n * sample variance.
            out.standard_errors[k - 1] = std::sqrt(loo[k].variance() * (n - 1.0) * (n - 1.0) / n);
        }
    }
    return out;
}

double gorc_lambda_log(double eps, std::size_t k) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("lambda(eps, k) needs eps in [0, 1]");
    if (k < 2) throw DomainError("lambda(eps, k) needs k >= 2");
    if (eps == 0.0) return neg_inf;
    const auto kd = static_cast<double>(k);
    double acc = neg_inf;
    for (std::size_t r = 1; r <= k / 2; ++r) {
        const auto rd = static_cast<double>(r);
        const double term = log_factorial(kd) + rd * std::log(eps) + (kd - 2.0 * rd) * std::log(3.0 * rd + 1.0) -
                            std::log(rd) - log_factorial(kd - 2.0 * rd);
        acc = log_add(acc, term);
    }
    return acc;
}

double gorc_lambda(double eps, std::size_t k) { return std::exp(gorc_lambda_log(eps, k)); }

double gamma_delta(double b, std::size_t r, const MixingProfile& mixing, std::size_t ell, double kappa, MomentCase mcase) {
    if (!(b > 0.0) || r == 0) throw DomainError("gamma_delta needs b > 0 and r >= 1");
    const auto qb = static_cast<std::size_t>(std::floor(b / 3.0));
    const double scale = 128.0 * static_cast<double>(ell) * static_cast<double>(r);
    if (mcase == MomentCase::bounded)
        return scale * (mixing.phi(qb) + std::pow(mixing.beta(kappa, qb), kappa));
    return scale * (std::sqrt(mixing.phi(qb)) + std::pow(mixing.beta(std::numeric_limits<double>::infinity(), qb), kappa));
}

// ---------------------------------------------------------------------------
// Cumulant bound for sums of weakly dependent vertices

namespace {

void check_instance(const GorcInstance& g) {
    if (g.vertex_count == 0) throw DomainError("vertex set is empty");
    if (!g.distance || !g.norm_proxy || !g.gamma) throw DomainError("instance is missing a distance, norm proxy or gamma");
    if (!(g.delta > 0.0)) throw DomainError("delta must be positive");
}

// For each vertex: distances to every vertex in increasing order with prefix sums of a norm proxy.
class NeighborhoodSums {
public:
    NeighborhoodSums(const GorcInstance& g, double t) : count_(g.vertex_count) {
        dist_.resize(count_ * count_);
        prefix_.resize(count_ * count_);
        for (std::size_t v = 0; v < count_; ++v) {
            std::vector<std::pair<double, double>> row(count_);
            for (std::size_t u = 0; u < count_; ++u) row[u] = {g.distance(u, v), g.norm_proxy(u, t)};
            std::sort(row.begin(), row.end());
            double acc = 0.0;
            for (std::size_t u = 0; u < count_; ++u) {
                acc += row[u].second;
                dist_[v * count_ + u] = row[u].first;
                prefix_[v * count_ + u] = acc;
            }
            max_distance_ = std::max(max_distance_, row.back().first);
        }
    }

    double L(double s) const {
        double best = 0.0;
        for (std::size_t v = 0; v < count_; ++v) {
            const auto first = dist_.begin() + static_cast<std::ptrdiff_t>(v * count_);
            const auto it = std::upper_bound(first, first + static_cast<std::ptrdiff_t>(count_), s);
            const auto k = static_cast<std::size_t>(it - first);
            if (k > 0) best = std::max(best, prefix_[v * count_ + k - 1]);
        }
        return best;
    }

    double max_distance() const { return max_distance_; }

private:
    std::size_t count_;
    std::vector<double> dist_;
    std::vector<double> prefix_;
    double max_distance_ = 0.0;
};

double total_norm(const GorcInstance& g, double t) {
    CompensatedSum s;
    for (std::size_t v = 0; v < g.vertex_count; ++v) s.add(g.norm_proxy(v, t));
    return s.value();
}

}  // namespace

double gorc_L(const GorcInstance& instance, double s, double t) {
    check_instance(instance);
    return NeighborhoodSums(instance, t).L(s);
}

double gorc_C(const GorcInstance& instance, double t) {
    check_instance(instance);
    return total_norm(instance, t);
}

GorcBound gorc_cumulant_bound(const GorcInstance& g, std::size_t k, double s) {
    check_instance(g);
    if (k < 2) throw DomainError("cumulant bound needs k >= 2");
    if (!(s > 0.0)) throw DomainError("cumulant bound needs s > 0");
    const auto kd = static_cast<double>(k);
    const double t_main = kd;
    const double t_rem = std::isinf(g.delta) ? std::numeric_limits<double>::infinity() : (1.0 + g.delta) * kd;

    GorcBound out;
    out.pairwise_adjusted = g.pairwise_only;
    const NeighborhoodSums main_sums(g, t_main);
    out.log_main = kd * std::log(2.0) + std::log(total_norm(g, t_main)) + (kd - 1.0) * std::log(main_sums.L(s));

    const NeighborhoodSums rem_sums(g, t_rem);
    const double log_c_rem = std::log(total_norm(g, t_rem));
    const double gamma_scale = g.pairwise_only ? kd : 1.0;
    auto gamma_tilde = [&](double m) {
        double best = 0.0;
        for (std::size_t r = 1; r <= k; ++r) best = std::max(best, gamma_scale * g.gamma(m, r) / static_cast<double>(r));
        return best;
    };

    double log_rem = neg_inf;
    double previous = neg_inf;
    constexpr std::size_t max_terms = 1'000'000;
    double m = std::floor(s) + 1.0;
    for (; out.terms < max_terms; m += 1.0, ++out.terms) {
        const double eps = std::min(1.0, gamma_tilde(m));
        const double term = eps > 0.0 ? (kd - 1.0) * std::log(rem_sums.L(m)) + log_c_rem + gorc_lambda_log(eps, k) : neg_inf;
        log_rem = log_add(log_rem, term);
        const bool saturated = m > rem_sums.max_distance();
        if (saturated) {
            if (term == neg_inf) break;  // gamma is nonincreasing in b, so every later term vanishes too
            if (previous != neg_inf && term < previous) {
                const double ratio = std::exp(term - previous);
                const double log_tail = term + std::log(ratio) - std::log1p(-ratio);
                if (log_tail < log_rem + std::log(1e-17) || term < std::log(1e-300)) {
                    out.truncation_error = std::exp(log_tail - log_rem);
                    ++out.terms;
                    break;
                }
            }
        }
        previous = term;
    }
    if (out.terms >= max_terms) out.truncation_error = std::numeric_limits<double>::infinity();
    out.log_remainder = log_rem;
    out.log_value = kd * std::log(kd) + log_add(out.log_main, log_rem);
    return out;
}

double cumulant_growth_bound_log(const CumulantGrowthParams& p, std::size_t k) {
    if (!p.c) throw DomainError("missing constant c for the cumulant growth bound");
    if (k < 2) throw DomainError("cumulant growth bound needs k >= 2");
    const auto kd = static_cast<double>(k);
    const double growth = (1.0 + p.u0 / p.eta) * log_factorial(kd);
    const double common = kd * std::log(p.d) + std::log(p.vertex_count) + kd * std::log(*p.c);
    if (std::isinf(p.delta)) {
        if (!p.m_infinity) throw DomainError("bounded form needs M_infinity");
        return std::log(2.0) + common + kd * std::log(*p.m_infinity) + growth;
    }
    if (p.moment_m && p.moment_theta) {
        const double theta = *p.moment_theta;
        return std::log(3.0) + theta / (1.0 + p.delta) * std::log(p.absolute_constant) + common +
               kd * std::log(1.0 + p.delta) + kd * std::log(*p.moment_m) + growth + theta * log_factorial(kd);
    }
    if (!p.norm_max) throw DomainError("general form needs the norm maxima M_q");
    const double mk = kd * std::log(p.norm_max(kd));
    const double mkd = kd * std::log(p.norm_max((1.0 + p.delta) * kd));
    return common + growth + log_add(mk, mkd);
}

double stirling_moment_constant(unsigned lambda, unsigned k_max) {
    if (lambda == 0) throw DomainError("lambda must be positive");
    double worst = neg_inf;
    const double l = lambda;
    for (unsigned k = 1; k <= k_max; ++k) {
        const double kd = k;
        const double excess = log_factorial(kd * l) - l * kd * std::log(l) - l * log_factorial(kd);
        worst = std::max(worst, excess / (l + 1.0));
    }
    return std::exp(worst);
}

double noncum_bound_log(double N, std::size_t k, double c0, double gamma, bool normalized) {
    if (k < 3) throw DomainError("cumulant growth bound needs k >= 3");
    if (!(N >= 1.0) || !(c0 > 0.0) || !(gamma >= 0.0)) throw DomainError("invalid cumulant growth parameters");
    const auto kd = static_cast<double>(k);
    const double base = (1.0 + gamma) * log_factorial(kd);
    if (normalized) return base + (kd - 2.0) * (std::log(c0) - 0.5 * std::log(N));
    return std::log(N) + base + (kd - 2.0) * std::log(c0);
}

}  // namespace nonconv
