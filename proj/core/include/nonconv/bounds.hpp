#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nonconv {

// Which moment regime the observable falls under: bounded Hoelder F, or F with polynomial
// growth and marginal moments tau_k^k <= M^k (k!)^zeta.
enum class Regime { bounded, unbounded };

struct AssumptionParams {
    Regime regime = Regime::bounded;
    double a = 1.0;
    double d = 1.0;
    double eta = 1.0;
    // Unbounded regime only.
    std::optional<double> M;
    std::optional<double> zeta;
    unsigned lambda = 0;
    std::optional<double> tau_lambda;
    // q_i(n) = p_i(n^l) with l >= 2 improves gamma to 1/(eta l^2).
    unsigned sparse_power = 1;

    void validate() const;
    // 1/eta, 1/eta + lambda zeta, or 1/(eta l^2) for power-sparse indices.
    double gamma() const;
};

struct NamedConstant {
    enum class Source { configured, calibrated };
    double value = 0.0;
    Source source = Source::configured;
    std::string note;
};

std::string to_string(NamedConstant::Source source);

// Every constant whose existence is asserted but whose value is not given. Names are
// c0..c7, a0, a_ell, c_ell, C0, C1, B, B1, B3.
class BoundConstants {
public:
    static const std::vector<std::string>& known_names();

    void set(const std::string& name, double value, NamedConstant::Source source, std::string note = {});
    bool has(const std::string& name) const { return values_.count(name) != 0; }
    double get(const std::string& name) const;
    const NamedConstant& entry(const std::string& name) const;
    const std::map<std::string, NamedConstant>& entries() const noexcept { return values_; }

private:
    std::map<std::string, NamedConstant> values_;
};

// log of exp(-x^2 / (2 (c1 + c2 x N^{-1/(2+4 gamma)})^{(1+2 gamma)/(1+gamma)})).
// The deviation x is on the sqrt(N) scale: the bound is compared with P(Sbar_N >= x sqrt(N)).
double concentration_bound_log(double x, double N, double c1, double c2, double gamma);
double concentration_bound(double x, double N, double c1, double c2, double gamma);

// Constants (c6, c7) for exp(-c7 (eps N)^{1/(1+gamma)}), N >= c6 eps^{-2-1/gamma}, obtained from
// the concentration bound at x = eps sqrt(N). On that window the local log-log slope of
// -log bound in N is within `slope_tolerance` (relative) of 1/(1+gamma).
struct LinearDeviationConstants {
    double c6 = 0.0;
    double c7 = 0.0;
};
LinearDeviationConstants linear_deviation_constants(double c1, double c2, double gamma, double slope_tolerance = 0.05);
double linear_deviation_bound_log(double eps, double N, double c7, double gamma);
double linear_deviation_threshold(double eps, double c6, double gamma);

// P(S_N >= t + B delta2) <= exp(-t^2 / (4 B^2 N l delta1^2)).
double chernoff_tail_bound_log(double t, double N, std::size_t ell, double delta1, double B);
double chernoff_tail_bound(double t, double N, std::size_t ell, double delta1, double B);
// The minimizer of -lambda t + B^2 lambda^2 N l delta1^2, which yields the tail above.
double chernoff_optimal_lambda(double t, double N, std::size_t ell, double delta1, double B);
// Rate c in P(S_N >= eps N) <= exp(-c eps^2 N) from t = eps N / 2, valid once N >= 2 B delta2 / eps.
double chernoff_linear_rate(std::size_t ell, double delta1, double B);
// log of the MGF bound exp(B lambda^2 N l delta1 + B lambda delta2).
double mgf_bound_log(double lambda, double N, std::size_t ell, double delta1, double delta2, double B);

struct ModdevValue {
    bool in_window = false;
    double value = 0.0;        // meaningful only in the window
    double window_edge = 0.0;  // c4 N^{1/(2+4 gamma)}
};
// c5 (1 + x^3) N^{-1/(2+4 gamma)} for 0 <= x < c4 N^{1/(2+4 gamma)}.
ModdevValue moddev_envelope(double x, double N, double c5, double gamma, double c4);

double mdp_rate(double x);
double mdp_speed(double a_N);

struct MdpSequenceReport {
    bool diverges = false;       // a_N increases along the scan and grows by a factor >= 2
    bool within_window = false;  // a_N N^{-1/(2+4 gamma)} decreases along the scan to below half its start
    std::vector<double> grid;
    std::vector<double> ratios;  // a_N N^{-1/(2+4 gamma)}
    bool valid() const noexcept { return diverges && within_window; }
};
// Scans N = 10^1 .. 10^max_decade (per decade) and checks both growth conditions numerically.
MdpSequenceReport check_mdp_sequence(const std::function<double(double)>& a, double gamma, int max_decade = 12);

double berry_esseen_constant(double gamma);
double berry_esseen_bound(double Delta, double gamma);

// log of c01^p (p!)^{1+gamma} sum_{1 <= u <= (p-1)/2} N^u p^u / (u!)^2; -inf for p in {1, 2}.
double momthm_bound_log(unsigned p, double N, double c0, double gamma);
double momthm_bound(unsigned p, double N, double c0, double gamma);

double variance_envelope(double N, double C);

}  // namespace nonconv
