#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nonconv/indexing.hpp"
#include "nonconv/linalg.hpp"
#include "nonconv/observable.hpp"
#include "nonconv/process.hpp"

namespace nonconv {

struct VarphiSum {
    double partial = 0.0;     // sum_{n=0}^{cutoff} phi(n)
    double tail_bound = 0.0;  // certified bound on sum_{n>cutoff} phi(n)
    double value() const noexcept { return partial + tail_bound; }
};

// Partial sum of phi plus a tail bound from the decay parameters d exp(-a n^eta).
VarphiSum varphi_sum(const MixingProfile& mixing, std::size_t cutoff);

// Certified bound on sum_{n>cutoff} phi(n).
double phi_tail_bound(const MixingProfile& mixing, std::size_t cutoff);

struct MartingaleConstants {
    double B = 1.0;   // R bound: |R| <= 2 B K (varphi + r + 1)
    double B1 = 1.0;  // difference bound: |W_i| <= B1 K (varphi + r + 1)
    double B3 = 1.0;  // gap bound delta2'
};

// Values of one path: R, Y, W are stored per i (1-based) at n = 0..ell N.
struct MartingalePath {
    std::size_t ell = 0;
    std::size_t length = 0;  // ell N + 1
    std::vector<double> R;
    std::vector<double> Y;
    std::vector<double> W;
    std::vector<double> M;  // M_0 = 0, ..., M_{ell N}
    double S_N = 0.0;       // computed directly from F, not from the decomposition

    double r(std::size_t i, std::size_t n) const { return R[(i - 1) * length + n]; }
    double y(std::size_t i, std::size_t n) const { return Y[(i - 1) * length + n]; }
    double w(std::size_t i, std::size_t n) const { return W[(i - 1) * length + n]; }
    // W_n^{(N)} = sum_i 1{n <= i N} W_{i,n}.
    double difference(std::size_t n) const { return M[n] - M[n - 1]; }
    double gap() const { return S_N - M.back(); }
};

// Martingale approximation of S_N for the linear family q_i(n) = i n over a finite chain:
// R_{i,n} = sum_{s>n} E[Y_{i,s} | xi_0..xi_n], W_{i,n} = Y_{i,n} + R_{i,n} - R_{i,n-1},
// M_n = sum_{m<=n} sum_i 1{m <= iN} W_{i,m}, where Y_{i,im} = F_i(xi_m, ..., xi_{im}).
// The infinite sum is truncated at s <= n + H with a certified tail.
class MartingaleDecomposition {
public:
    std::uint64_t N() const noexcept { return N_; }
    std::size_t ell() const noexcept { return ell_; }
    // r = 0 for chains; the dyadic level for a doubling map (its block chain is used).
    std::size_t r() const noexcept { return r_; }
    std::size_t horizon() const noexcept { return horizon_; }
    double truncation_error() const noexcept { return truncation_error_; }  // per R value, summed over i
    const VarphiSum& varphi() const noexcept { return varphi_; }
    double K() const noexcept { return K_; }
    const MartingaleConstants& constants() const noexcept { return constants_; }
    // B K (varphi + r + 1) and B3 K (N beta + varphi + r + 1) with beta = 0 here.
    double delta1_prime() const;
    double delta2_prime() const;
    double r_bound() const;           // 2 B K (varphi + r + 1)
    double difference_bound() const;  // ell B1 K (varphi + r + 1)
    double component_sup(std::size_t i) const { return component_sup_.at(i - 1); }
    const ProcessModel& chain() const noexcept { return chain_; }
    const CenteredObservable& observable() const noexcept { return cf_; }

    // The path holds xi_0..xi_{ell N} as state ids of chain().
    MartingalePath evaluate(std::span<const std::uint32_t> path) const;
    // E[Y_{i,s} | xi_0..xi_n] for s > n from the known coordinates of the path prefix.
    double conditional_term(std::size_t i, std::uint64_t s, std::uint64_t n, std::span<const std::uint32_t> prefix) const;
    // R_{i,n} from the prefix xi_0..xi_n.
    double remainder(std::size_t i, std::uint64_t n, std::span<const std::uint32_t> prefix) const;

    friend MartingaleDecomposition build_decomposition(const ProcessModel&, const CenteredObservable&,
                                                       const IndexFamily&, std::uint64_t, MartingaleConstants,
                                                       double, std::size_t);

private:
    MartingaleDecomposition(ProcessModel chain, CenteredObservable cf) : chain_(std::move(chain)), cf_(std::move(cf)) {}
    const Matrix& gap_power(std::uint64_t g) const;

    ProcessModel chain_;
    CenteredObservable cf_;
    std::uint64_t N_ = 0;
    std::size_t ell_ = 0;
    std::size_t r_ = 0;
    std::size_t horizon_ = 0;
    double truncation_error_ = 0.0;
    VarphiSum varphi_;
    double K_ = 1.0;
    MartingaleConstants constants_;
    std::vector<double> component_sup_;
    std::vector<Matrix> powers_;  // P^0 .. P^{max gap}
};

inline constexpr double default_truncation_target = 1e-8;

MartingaleDecomposition build_decomposition(const ProcessModel& model, const CenteredObservable& cf,
                                            const IndexFamily& family, std::uint64_t N,
                                            MartingaleConstants constants = {},
                                            double truncation_target = default_truncation_target,
                                            std::size_t max_horizon = 4096);

struct MartingaleCheck {
    enum class Mode { exhaustive, sampled };
    Mode mode = Mode::exhaustive;
    std::size_t pasts = 0;      // number of (n, past) pairs tested
    double worst = 0.0;         // max |E[W_n | past]|
    std::size_t worst_n = 0;
    std::vector<std::uint32_t> worst_past;
    double tolerance = 0.0;     // tol + truncation allowance
    bool pass = false;
};

// Exhaustive: every path xi_0..xi_{ell N} (S^{ell N + 1} <= 10^6). Sampled: pasts along the given keys.
MartingaleCheck check_martingale_exhaustive(const MartingaleDecomposition& decomp, double tol = 1e-8,
                                            std::size_t budget = 1'000'000);
MartingaleCheck check_martingale_sampled(const MartingaleDecomposition& decomp, std::span<const std::uint64_t> keys,
                                         double tol = 1e-8);

// Path xi_0..xi_{ell N} of the decomposition's chain for a replicate key.
std::vector<std::uint32_t> martingale_path(const MartingaleDecomposition& decomp, std::uint64_t key);

struct GapReport {
    double max_gap = 0.0;         // max |S_N - M_{ell N}|
    double delta2_prime = 0.0;
    double max_difference = 0.0;  // max |W_n^{(N)}|
    double max_remainder = 0.0;   // max |R_{i,n}|
    double max_telescoping_error = 0.0;  // |S_N - M - sum_i (R_{i,0} - R_{i,iN})|
    std::vector<double> sup_differences;  // per n = 1..ell N, max over paths of |W_n^{(N)}|
    std::vector<double> terminal_values;  // M_{ell N} per path
    std::vector<double> sums;             // S_N per path
    std::size_t paths = 0;
    bool pass = false;
};

// Evaluates the decomposition on the paths of the given keys. When `expected_sums` is non-empty it
// must hold S_N computed independently from the same keys; a mismatch raises DomainError.
GapReport sup_gap(const MartingaleDecomposition& decomp, std::span<const std::uint64_t> keys,
                  std::span<const double> expected_sums = {});

struct AzumaRow {
    double lambda = 0.0;
    double mgf_martingale = 0.0;  // mean of exp(lambda M_{ell N})
    double mgf_martingale_upper = 0.0;
    double azuma_bound = 0.0;     // exp(lambda^2 sum_n ||W_n||^2)
    double mgf_sum = 0.0;         // mean of exp(lambda S_N)
    double mgf_sum_lower = 0.0;
    double mgf_sum_upper = 0.0;
    double display_bound = 0.0;   // exp(B lambda^2 N l delta1 + B lambda delta2)
    bool inconclusive = false;    // one replicate carries more than half of the mean
    bool pass_azuma = false;
    bool pass_display = false;
};

struct AzumaReport {
    std::vector<AzumaRow> rows;
    bool pass = false;
};

// Empirical MGFs (bootstrap CIs, `resamples` seeded by `seed`) against the Azuma bound for M and the
// displayed bound for S_N with constant B, delta1 and delta2.
AzumaReport azuma_mgf_check(const GapReport& gaps, std::span<const double> lambdas, double B, double delta1,
                            double delta2, std::uint64_t N, std::size_t ell, std::size_t resamples = 999,
                            std::uint64_t seed = 0);

}  // namespace nonconv
