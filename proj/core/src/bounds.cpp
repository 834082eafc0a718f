#include "nonconv/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nonconv/errors.hpp"

namespace nonconv {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

double log_add(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

void AssumptionParams::validate() const {
    require_positive(a, "decay rate a");
    require_positive(d, "decay prefactor d");
    require_positive(eta, "decay exponent eta");
    if (sparse_power == 0) throw DomainError("sparse power must be at least 1");
    if (regime == Regime::unbounded) {
        if (lambda < 1) throw DomainError("unbounded regime needs lambda >= 1");
        if (!M || !zeta || !tau_lambda) throw DomainError("unbounded regime needs M, zeta and tau_lambda");
        require_positive(*M, "M");
        if (!(*zeta >= 0.0)) throw DomainError("zeta must be nonnegative");
        require_positive(*tau_lambda, "tau_lambda");
    }
}

double AssumptionParams::gamma() const {
    validate();
    if (regime == Regime::unbounded) return 1.0 / eta + static_cast<double>(lambda) * *zeta;
    const auto l = static_cast<double>(sparse_power);
    return 1.0 / (eta * l * l);
}

std::string to_string(NamedConstant::Source source) {
    return source == NamedConstant::Source::configured ? "configured" : "calibrated";
}

const std::vector<std::string>& BoundConstants::known_names() {
    static const std::vector<std::string> names{"c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "a0",
                                                "a_ell", "c_ell", "C0", "C1", "B", "B1", "B3"};
    return names;
}

void BoundConstants::set(const std::string& name, double value, NamedConstant::Source source, std::string note) {
    const auto& names = known_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) throw DomainError("unknown constant " + name);
    require_positive(value, name.c_str());
    values_[name] = NamedConstant{value, source, std::move(note)};
}

double BoundConstants::get(const std::string& name) const { return entry(name).value; }

const NamedConstant& BoundConstants::entry(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw DomainError("constant " + name + " is neither configured nor calibrated");
    return it->second;
}

double concentration_bound_log(double x, double N, double c1, double c2, double gamma) {
    require_positive(c1, "c1");
    require_positive(c2, "c2");
    require_positive(gamma, "gamma");
    if (!(x >= 0.0)) throw DomainError("deviation must be nonnegative");
    if (!(N >= 1.0)) throw DomainError("N must be at least 1");
    if (x == 0.0) return 0.0;
    const double p = (1.0 + 2.0 * gamma) / (1.0 + gamma);
    const double inner = c1 + c2 * std::exp(std::log(x) - std::log(N) / (2.0 + 4.0 * gamma));
    return -std::exp(2.0 * std::log(x) - std::log(2.0) - p * std::log(inner));
}

double concentration_bound(double x, double N, double c1, double c2, double gamma) {
    return std::exp(concentration_bound_log(x, N, c1, c2, gamma));
}

LinearDeviationConstants linear_deviation_constants(double c1, double c2, double gamma, double slope_tolerance) {
    require_positive(c1, "c1");
    require_positive(c2, "c2");
    require_positive(gamma, "gamma");
    require_positive(slope_tolerance, "slope tolerance");
    // With x = eps sqrt(N) and u = c2 eps N^{gamma/(1+2 gamma)} / c1 the exponent equals
    // (eps N)^{1/(1+gamma)} (u/(1+u))^p / (2 c2^p), whose log-slope is 1 - gamma/(1+gamma) u/(1+u).
    const double p = (1.0 + 2.0 * gamma) / (1.0 + gamma);
    const double s = std::max(0.5, 1.0 - slope_tolerance / gamma);
    const double u0 = s / (1.0 - s);
    LinearDeviationConstants out;
    out.c6 = std::pow(u0 * c1 / c2, (1.0 + 2.0 * gamma) / gamma);
    out.c7 = std::pow(s / c2, p) / 2.0;
    return out;
}

double linear_deviation_bound_log(double eps, double N, double c7, double gamma) {
    require_positive(eps, "eps");
    require_positive(c7, "c7");
    return -c7 * std::pow(eps * N, 1.0 / (1.0 + gamma));
}

double linear_deviation_threshold(double eps, double c6, double gamma) {
    require_positive(eps, "eps");
    return c6 * std::pow(eps, -2.0 - 1.0 / gamma);
}

double chernoff_tail_bound_log(double t, double N, std::size_t ell, double delta1, double B) {
    require_positive(delta1, "delta1");
    require_positive(B, "B");
    if (!(t >= 0.0)) throw DomainError("threshold must be nonnegative");
    if (!(N >= 1.0) || ell == 0) throw DomainError("need N >= 1 and ell >= 1");
    return -(t * t) / (4.0 * B * B * N * static_cast<double>(ell) * delta1 * delta1);
}

double chernoff_tail_bound(double t, double N, std::size_t ell, double delta1, double B) {
    return std::exp(chernoff_tail_bound_log(t, N, ell, delta1, B));
}

double chernoff_optimal_lambda(double t, double N, std::size_t ell, double delta1, double B) {
    require_positive(delta1, "delta1");
    require_positive(B, "B");
    return t / (2.0 * B * B * N * static_cast<double>(ell) * delta1 * delta1);
}

double chernoff_linear_rate(std::size_t ell, double delta1, double B) {
    require_positive(delta1, "delta1");
    require_positive(B, "B");
    return 1.0 / (16.0 * B * B * static_cast<double>(ell) * delta1 * delta1);
}

double mgf_bound_log(double lambda, double N, std::size_t ell, double delta1, double delta2, double B) {
    return B * lambda * lambda * N * static_cast<double>(ell) * delta1 + B * lambda * delta2;
}

ModdevValue moddev_envelope(double x, double N, double c5, double gamma, double c4) {
    require_positive(c5, "c5");
    require_positive(c4, "c4");
    require_positive(gamma, "gamma");
    if (!(N >= 1.0)) throw DomainError("N must be at least 1");
    ModdevValue out;
    const double power = 1.0 / (2.0 + 4.0 * gamma);
    out.window_edge = c4 * std::pow(N, power);
    out.in_window = x >= 0.0 && x < out.window_edge;
    if (out.in_window) out.value = c5 * (1.0 + x * x * x) * std::pow(N, -power);
    else out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
}

double mdp_rate(double x) { return x * x / 2.0; }

double mdp_speed(double a_N) { return a_N * a_N; }

MdpSequenceReport check_mdp_sequence(const std::function<double(double)>& a, double gamma, int max_decade) {
    require_positive(gamma, "gamma");
    if (max_decade < 2) throw DomainError("scan needs at least two decades");
    MdpSequenceReport rep;
    std::vector<double> values;
    for (int e = 1; e <= max_decade; ++e) {
        const double N = std::pow(10.0, e);
        const double v = a(N);
        rep.grid.push_back(N);
        values.push_back(v);
        rep.ratios.push_back(v * std::pow(N, -1.0 / (2.0 + 4.0 * gamma)));
    }
    rep.diverges = std::is_sorted(values.begin(), values.end()) && values.front() > 0.0 &&
                   values.back() >= 2.0 * values.front();
    rep.within_window = std::is_sorted(rep.ratios.rbegin(), rep.ratios.rend()) &&
                        rep.ratios.back() <= 0.5 * rep.ratios.front();
    return rep;
}

double berry_esseen_constant(double gamma) {
    if (!(gamma >= 0.0)) throw DomainError("gamma must be nonnegative");
    return std::pow(std::sqrt(2.0) / 6.0, 1.0 / (1.0 + 2.0 * gamma)) / 6.0;
}

double berry_esseen_bound(double Delta, double gamma) {
    require_positive(Delta, "Delta");
    return berry_esseen_constant(gamma) * std::pow(Delta, -1.0 / (1.0 + 2.0 * gamma));
}

double momthm_bound_log(unsigned p, double N, double c0, double gamma) {
    if (p == 0) throw DomainError("p must be at least 1");
    require_positive(c0, "c0");
    if (!(N >= 1.0)) throw DomainError("N must be at least 1");
    const double dp = p;
    double sum = neg_inf;
    for (unsigned u = 1; 2 * u <= p - 1; ++u) {
        const double du = u;
        sum = log_add(sum, du * std::log(N) + du * std::log(dp) - 2.0 * std::lgamma(du + 1.0));
    }
    if (sum == neg_inf) return neg_inf;
    return dp * std::log(std::max(1.0, c0)) + (1.0 + gamma) * std::lgamma(dp + 1.0) + sum;
}

double momthm_bound(unsigned p, double N, double c0, double gamma) {
    const double log_value = momthm_bound_log(p, N, c0, gamma);
    if (!(log_value < 700.0)) return std::exp(log_value);
    // Representable: evaluate the finite sum directly so small cases come out exact.
    const double dp = p;
    double sum = 0.0;
    for (unsigned u = 1; 2 * u <= p - 1; ++u) {
        const double fact = std::tgamma(u + 1.0);
        sum += std::pow(N * dp, u) / (fact * fact);
    }
    return std::pow(std::max(1.0, c0), dp) * std::pow(std::tgamma(dp + 1.0), 1.0 + gamma) * sum;
}

double variance_envelope(double N, double C) {
    if (!(N >= 1.0)) throw DomainError("N must be at least 1");
    if (!(C >= 0.0)) throw DomainError("envelope constant must be nonnegative");
    return C * std::sqrt(N);
}

}  // namespace nonconv
