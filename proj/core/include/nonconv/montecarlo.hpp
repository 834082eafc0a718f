#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nonconv/bounds.hpp"
#include "nonconv/indexing.hpp"
#include "nonconv/observable.hpp"
#include "nonconv/process.hpp"

namespace nonconv {

inline constexpr std::size_t min_ci_replicates = 100;

struct Experiment {
    std::string name;
    std::shared_ptr<const ProcessModel> model;
    std::shared_ptr<const CenteredObservable> observable;
    std::shared_ptr<const IndexFamily> family;
    std::vector<std::uint64_t> n_grid;
    std::size_t replicates = 1000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    SamplingBudget sampling;
    std::size_t memory_budget_mb = 0;  // 0: unlimited

    void validate() const;
};

// Runs fn(begin, end) over a static partition of [0, count) on up to `workers` threads.
void parallel_blocks(std::size_t count, std::size_t workers, const std::function<void(std::size_t, std::size_t)>& fn);

// Key of replicate j at horizon N.
std::uint64_t replicate_key(std::uint64_t master, std::uint64_t N, std::uint64_t j);

struct SumSample {
    std::uint64_t N = 0;
    std::vector<double> sums;      // S_N
    std::vector<double> centered;  // S_N - E S_N
    double mean = 0.0;             // the mean subtracted
    bool exact_mean = false;       // exact E S_N, otherwise the grand mean
};

SumSample replicate_sums(const Experiment& experiment, std::uint64_t N);

struct TailEstimate {
    double x = 0.0;
    double p_hat = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::size_t exceedances = 0;
    std::size_t replicates = 0;
};

// Fraction of samples >= x with an exact binomial interval.
TailEstimate tail_estimate(std::span<const double> samples, double x, double confidence = 0.95);

struct VarianceFit {
    std::vector<std::uint64_t> grid;
    std::vector<double> variances;
    std::vector<double> variance_se;
    std::vector<double> residuals;  // Var - D2 N
    std::size_t calibration_points = 0;  // the first points fit D2 and C1; the rest are holdout
    double d2 = 0.0;
    double d2_se = 0.0;
    double envelope_constant = 0.0;
    std::vector<bool> envelope_pass;
    bool pass = false;
};

// D2 by weighted least squares through the origin on all but the last `holdout` grid points;
// C1 calibrated on the same points at their upper edge and tested on the holdout at the lower edge.
VarianceFit variance_scan(const Experiment& experiment, std::size_t holdout = 1);
VarianceFit fit_variance(std::vector<std::uint64_t> grid, std::vector<double> variances, std::vector<double> se,
                         std::size_t holdout = 1);

struct KolmogorovRow {
    std::uint64_t N = 0;
    double distance = 0.0;
};

struct KolmogorovScan {
    std::vector<KolmogorovRow> rows;
    double slope = 0.0;  // of log distance against log N
    double slope_se = 0.0;
};

// Kolmogorov distance of the standardized centered sums (sample standard deviation) for each N.
KolmogorovScan kolmogorov_scan(const Experiment& experiment);

struct MdpCell {
    std::uint64_t N = 0;
    double x = 0.0;
    double a_N = 0.0;
    double d_hat = 0.0;
    std::size_t exceedances = 0;
    double p_hat = 0.0;
    double normalized = 0.0;  // -log p_hat / a_N^2
    double band_low = 0.0;    // from the upper end of the binomial interval
    double band_high = 0.0;
    double rate = 0.0;        // x^2 / 2
    bool inconclusive = false;
};

struct MdpDiagnostic {
    std::vector<MdpCell> cells;
    MdpSequenceReport sequence;
};

// Normalized log tails -log P(Sbar_N >= x D_hat sqrt(N) a_N) / a_N^2 against x^2/2. A cell is
// inconclusive when fewer than 20 exceedances are observed.
MdpDiagnostic mdp_diagnostic(const Experiment& experiment, const std::function<double(double)>& a, double gamma,
                             std::span<const double> x_grid);

struct CumulantRow {
    std::uint64_t N = 0;
    std::size_t k = 0;
    double gamma_hat = 0.0;
    double se = 0.0;
    double normalized = 0.0;     // Gamma_k(N^{-1/2} Sbar_N)
    double normalized_se = 0.0;
    double bound_log = 0.0;      // log N (k!)^{1+gamma} c0^{k-2}; NaN before calibration
    bool holdout = false;
    bool pass = true;
};

struct CumulantScan {
    std::vector<CumulantRow> rows;
    double c0 = 0.0;
    double gamma = 1.0;
    std::size_t holdout = 0;
    bool pass = false;

    // log-log slope of |normalized Gamma_k| against N.
    double normalized_slope(std::size_t k) const;
};

// Sample cumulants of Sbar_N for each grid N; with `holdout` > 0 the last grid points are held out
// of the c0 calibration and checked against the calibrated envelope.
CumulantScan cumulant_scan(const Experiment& experiment, std::size_t k_max, double gamma, std::size_t holdout = 1,
                           std::optional<double> c0 = {});

// Rebuilds the envelope comparison from sample rows: calibrates c0 unless given.
void apply_cumulant_envelope(CumulantScan& scan, std::optional<double> c0);

struct CalibrationOptions {
    double safety = 1.5;
    double floor = 1e-6;
    double z = 1.959963984540054;  // conservative edge: estimate +- z se
};

// The minimal constant making every requirement hold, times the safety factor, at least `floor`.
// Requirements must be finite; an infinite one means no constant works and raises DomainError.
double calibrate_minimal(std::span<const double> requirements, const CalibrationOptions& options = {});

struct TailRow {
    std::uint64_t N = 0;
    TailEstimate tail;        // of Sbar_N at x sqrt(N)
    double x = 0.0;
};

// Tails of Sbar_N at thresholds x sqrt(N).
std::vector<TailRow> tail_scan(const Experiment& experiment, std::span<const double> x_grid);

// c1 = c2 minimal so that the concentration bound dominates every upper tail edge (points with an
// upper edge of 1 are skipped), times the safety factor.
double calibrate_concentration(std::span<const TailRow> rows, double gamma, const CalibrationOptions& options = {});

struct MomentCheckRow {
    unsigned p = 0;
    double empirical = 0.0;
    double reconstructed = 0.0;
    double bootstrap_se = 0.0;
    bool pass = false;
};

// Empirical E(Sbar)^p against the moment rebuilt from the sample cumulants (p <= 4).
std::vector<MomentCheckRow> moment_consistency(std::span<const double> centered, unsigned p_max,
                                               std::size_t resamples, std::uint64_t seed);

}  // namespace nonconv
