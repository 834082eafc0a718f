#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "nonconv/process.hpp"

namespace nonconv {

inline constexpr std::size_t max_exact_cumulant_order = 16;
inline constexpr std::size_t max_sample_cumulant_order = 8;

// Moments m_1..m_k and cumulants Gamma_1..Gamma_k (index 0 holds order 1).
struct CumulantVector {
    enum class Provenance { exact, sample };

    std::vector<double> moments;
    std::vector<double> cumulants;
    // Jackknife standard errors for sample cumulants of order <= 4; NaN where unavailable.
    std::vector<double> standard_errors;
    Provenance provenance = Provenance::exact;
    std::size_t replicates = 0;

    std::size_t order() const noexcept { return cumulants.size(); }
    double gamma(std::size_t k) const { return cumulants.at(k - 1); }
    double moment(std::size_t k) const { return moments.at(k - 1); }
    double standard_error(std::size_t k) const {
        return k - 1 < standard_errors.size() ? standard_errors[k - 1] : std::numeric_limits<double>::quiet_NaN();
    }
};

// Gamma_k = m_k - sum_{j=1}^{k-1} C(k-1, j-1) Gamma_j m_{k-j}, in extended precision.
std::vector<double> moments_to_cumulants(std::span<const double> moments);

// Raw moments as sums over compositions k_1 + ... + k_u = p of
// p!/(u! k_1! ... k_u!) Gamma_{k_1} ... Gamma_{k_u}. With `centered`, Gamma_1 must vanish and
// only parts k_j >= 2 appear, which gives the central moments E(W - EW)^p.
std::vector<double> cumulants_to_moments(std::span<const double> cumulants, bool centered = false);

CumulantVector exact_cumulants(std::span<const double> moments);

// Unbiased k-statistics (orders <= 4, with jackknife errors) and plug-in cumulants of orders 5..8.
CumulantVector sample_cumulants(std::span<const double> samples, std::size_t k_max);

// lambda(eps, k) = k! sum_{r=1}^{floor(k/2)} eps^r (3r+1)^{k-2r} / (r (k-2r)!).
double gorc_lambda(double eps, std::size_t k);
double gorc_lambda_log(double eps, std::size_t k);

enum class MomentCase { bounded, unbounded };

// gamma_inf(b, r) = 128 l r (phi(q_b) + beta_kappa(q_b)^kappa) in the bounded case and
// gamma_1(b, r) = 128 l r (phi(q_b)^{1/2} + beta_inf(q_b)^kappa) otherwise, with q_b = floor(b/3).
double gamma_delta(double b, std::size_t r, const MixingProfile& mixing, std::size_t ell, double kappa, MomentCase mcase);

struct GorcInstance {
    std::size_t vertex_count = 0;
    std::function<double(std::size_t, std::size_t)> distance;  // rho on V, vertices 0-based
    std::function<double(std::size_t, double)> norm_proxy;     // varrho_{v,t}; t may be +inf
    double delta = std::numeric_limits<double>::infinity();
    std::function<double(double, std::size_t)> gamma;          // gamma_delta(b, r)
    // Decoupling known only for two groups: gamma is multiplied by k (induction remark).
    bool pairwise_only = false;
};

struct GorcBound {
    double log_value = 0.0;      // log of k^k (2^k C(k) L_s(k)^{k-1} + R_s(delta, k))
    double log_main = 0.0;       // log of 2^k C(k) L_s(k)^{k-1}
    double log_remainder = 0.0;  // log R_s(delta, k); -inf when it vanishes
    double truncation_error = 0.0;  // bound on the dropped part of R_s, relative to R_s
    std::size_t terms = 0;
    bool pairwise_adjusted = false;
};

double gorc_L(const GorcInstance& instance, double s, double t);
double gorc_C(const GorcInstance& instance, double t);
GorcBound gorc_cumulant_bound(const GorcInstance& instance, std::size_t k, double s);

struct CumulantGrowthParams {
    double c0 = 1.0;
    double u0 = 1.0;
    double a = 1.0;
    double d = 1.0;
    double eta = 1.0;
    double delta = std::numeric_limits<double>::infinity();
    double vertex_count = 1.0;
    std::optional<double> c;                 // scale constant of the growth bound
    std::optional<double> m_infinity;        // bounded case
    std::optional<double> moment_m;          // (varrho_{v,k})^k <= M^k (k!)^theta
    std::optional<double> moment_theta;
    double absolute_constant = 1.0;          // the absolute C of the moment case
    std::function<double(double)> norm_max;  // q -> M_q for the general estimate
};

// log of the cumulant growth bound: the bounded form when delta is infinite, the moment-growth form
// when (M, theta) are given, otherwise the general form with M_k and M_{(1+delta)k}.
double cumulant_growth_bound_log(const CumulantGrowthParams& params, std::size_t k);

// Smallest C with (k lambda)! <= C^{lambda+1} lambda^{lambda k} (k!)^lambda for k = 1..k_max.
double stirling_moment_constant(unsigned lambda, unsigned k_max);

// log of N (k!)^{1+gamma} c0^{k-2}, or of (k!)^{1+gamma} (c0/sqrt(N))^{k-2} when normalized.
double noncum_bound_log(double N, std::size_t k, double c0, double gamma, bool normalized = false);

}  // namespace nonconv
