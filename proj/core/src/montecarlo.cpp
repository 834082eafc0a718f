#include "nonconv/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "nonconv/cumulants.hpp"
#include "nonconv/errors.hpp"
#include "nonconv/rng.hpp"
#include "nonconv/statistics.hpp"

namespace nonconv {

void Experiment::validate() const {
    if (!model || !observable || !family) throw ConfigError("experiment needs a model, an observable and an index family");
    if (observable->ell() != family->ell()) throw ConfigError("observable arity does not match the index family");
    if (n_grid.empty()) throw ConfigError("empty N grid");
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
        if (n_grid[k] == 0) throw ConfigError("N grid entries must be positive");
        if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw ConfigError("N grid must be strictly ascending");
    }
    if (replicates == 0) throw ConfigError("replicate count must be positive");
    if (workers == 0) throw ConfigError("worker count must be positive");
}

void parallel_blocks(std::size_t count, std::size_t workers, const std::function<void(std::size_t, std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        if (count) fn(0, count);
        return;
    }
    std::vector<std::thread> threads;
    std::exception_ptr failure;
    std::mutex guard;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = count * w / workers, end = count * (w + 1) / workers;
        threads.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard lock(guard);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::uint64_t replicate_key(std::uint64_t master, std::uint64_t N, std::uint64_t j) {
    return stream_key(stream_key(master, N), j);
}

SumSample replicate_sums(const Experiment& experiment, std::uint64_t N) {
    experiment.validate();
    const auto& model = *experiment.model;
    const auto& cf = *experiment.observable;
    const auto& family = *experiment.family;
    const SumPlan plan(family, N);
    if (plan.indices().back() > experiment.sampling.max_index) throw BudgetError("largest index exceeds the sampling budget");
    const std::size_t R = experiment.replicates;
    if (experiment.memory_budget_mb) {
        const double bytes = 16.0 * static_cast<double>(R) +
                             static_cast<double>(plan.indices().size()) * (12.0 + 4.0 * static_cast<double>(experiment.workers)) +
                             4.0 * static_cast<double>(N * plan.ell());
        if (bytes > static_cast<double>(experiment.memory_budget_mb) * 1048576.0)
            throw BudgetError("replicate sums exceed the memory budget");
    }
    SumSample out;
    out.N = N;
    out.sums.assign(R, 0.0);
    const bool tabulated = cf.exact() && cf.law().size() == model.state_count();
    parallel_blocks(R, experiment.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint32_t> states(plan.indices().size());
        for (std::size_t j = begin; j < end; ++j) {
            const std::uint64_t key = replicate_key(experiment.seed, N, j);
            if (tabulated) {
                sample_states(model, plan.indices(), key, states);
                out.sums[j] = nonconv_sum_from_states(cf, plan, states);
            } else {
                out.sums[j] = nonconv_sum(model, cf, family, N, key, experiment.sampling);
            }
        }
    });
    try {
        out.mean = exact_mean_SN(model, cf, family, N);
        out.exact_mean = true;
    } catch (const DomainError&) {
        out.mean = compensated_sum(out.sums) / static_cast<double>(R);
    } catch (const BudgetError&) {
        out.mean = compensated_sum(out.sums) / static_cast<double>(R);
    }
    out.centered.resize(R);
    for (std::size_t j = 0; j < R; ++j) out.centered[j] = out.sums[j] - out.mean;
    return out;
}

TailEstimate tail_estimate(std::span<const double> samples, double x, double confidence) {
    if (samples.empty()) throw DomainError("tail estimate needs samples");
    if (samples.size() < min_ci_replicates) throw DomainError("tail estimate needs at least 100 replicates");
    TailEstimate t;
    t.x = x;
    t.replicates = samples.size();
    t.exceedances = static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [x](double v) { return v >= x; }));
    t.p_hat = static_cast<double>(t.exceedances) / static_cast<double>(t.replicates);
    const auto ci = clopper_pearson(t.exceedances, t.replicates, confidence);
    t.lower = ci.lower;
    t.upper = ci.upper;
    return t;
}

VarianceFit fit_variance(std::vector<std::uint64_t> grid, std::vector<double> variances, std::vector<double> se,
                         std::size_t holdout) {
    if (grid.size() != variances.size() || grid.size() != se.size()) throw DomainError("variance fit inputs differ in length");
    if (grid.size() < holdout + 2) throw DomainError("variance fit needs at least two calibration points");
    if (grid.back() < 16 * grid.front()) throw DomainError("N grid must span at least a factor of 16");
    VarianceFit fit;
    fit.grid = std::move(grid);
    fit.variances = std::move(variances);
    fit.variance_se = std::move(se);
    fit.calibration_points = fit.grid.size() - holdout;
    const std::size_t c = fit.calibration_points;
    std::vector<double> x(c), y(c), w(c);
    bool weighted = true;
    for (std::size_t k = 0; k < c; ++k) {
        x[k] = static_cast<double>(fit.grid[k]);
        y[k] = fit.variances[k];
        if (!(fit.variance_se[k] > 0.0)) weighted = false;
        w[k] = fit.variance_se[k] > 0.0 ? 1.0 / (fit.variance_se[k] * fit.variance_se[k]) : 1.0;
    }
    if (!weighted) std::fill(w.begin(), w.end(), 1.0);
    const auto line = weighted_least_squares_origin(x, y, w);
    fit.d2 = std::max(0.0, line.slope);
    fit.d2_se = weighted ? line.slope_se : 0.0;
    const double z = CalibrationOptions{}.z;
    std::vector<double> req;
    for (std::size_t k = 0; k < fit.grid.size(); ++k) {
        const double n = static_cast<double>(fit.grid[k]);
        fit.residuals.push_back(fit.variances[k] - fit.d2 * n);
        if (k < c) req.push_back((std::abs(fit.residuals[k]) + z * fit.variance_se[k]) / std::sqrt(n));
    }
    CalibrationOptions opts;
    fit.envelope_constant = calibrate_minimal(req, opts);
    fit.pass = true;
    for (std::size_t k = 0; k < fit.grid.size(); ++k) {
        const double lower_edge = std::max(0.0, std::abs(fit.residuals[k]) - z * fit.variance_se[k]);
        const bool ok = lower_edge <= variance_envelope(static_cast<double>(fit.grid[k]), fit.envelope_constant);
        fit.envelope_pass.push_back(ok);
        fit.pass = fit.pass && ok;
    }
    return fit;
}

VarianceFit variance_scan(const Experiment& experiment, std::size_t holdout) {
    experiment.validate();
    if (experiment.replicates < min_ci_replicates) throw DomainError("variance scan needs at least 100 replicates");
    std::vector<double> var, se;
    for (std::uint64_t N : experiment.n_grid) {
        const auto s = replicate_sums(experiment, N);
        const auto cv = sample_cumulants(s.centered, 2);
        var.push_back(cv.gamma(2));
        se.push_back(cv.standard_error(2));
    }
    return fit_variance(experiment.n_grid, std::move(var), std::move(se), holdout);
}

KolmogorovScan kolmogorov_scan(const Experiment& experiment) {
    experiment.validate();
    KolmogorovScan scan;
    std::vector<double> lx, ly;
    for (std::uint64_t N : experiment.n_grid) {
        const auto s = replicate_sums(experiment, N);
        RunningMoments m;
        for (double v : s.centered) m.add(v);
        const double sd = std::sqrt(m.variance());
        if (!(sd > 0.0)) throw DomainError("degenerate sums: standard deviation is zero");
        const double d = kolmogorov_distance(s.centered, m.mean(), sd);
        scan.rows.push_back({N, d});
        lx.push_back(std::log(static_cast<double>(N)));
        ly.push_back(std::log(d));
    }
    if (lx.size() >= 2) {
        const auto fit = least_squares(lx, ly);
        scan.slope = fit.slope;
        scan.slope_se = fit.slope_se;
    }
    return scan;
}

MdpDiagnostic mdp_diagnostic(const Experiment& experiment, const std::function<double(double)>& a, double gamma,
                             std::span<const double> x_grid) {
    experiment.validate();
    MdpDiagnostic diag;
    diag.sequence = check_mdp_sequence(a, gamma);
    if (!diag.sequence.valid()) throw DomainError("a_N violates the moderate deviation window");
    for (std::uint64_t N : experiment.n_grid) {
        const auto s = replicate_sums(experiment, N);
        RunningMoments m;
        for (double v : s.centered) m.add(v);
        const double sd = std::sqrt(m.variance());
        const double n = static_cast<double>(N);
        const double aN = a(n);
        for (double x : x_grid) {
            MdpCell cell;
            cell.N = N;
            cell.x = x;
            cell.a_N = aN;
            cell.d_hat = sd / std::sqrt(n);
            cell.rate = mdp_rate(x);
            const auto t = tail_estimate(s.centered, x * sd * aN);
            cell.exceedances = t.exceedances;
            cell.p_hat = t.p_hat;
            const double speed = mdp_speed(aN);
            cell.normalized = t.exceedances ? -std::log(t.p_hat) / speed : std::numeric_limits<double>::infinity();
            cell.band_low = -std::log(t.upper) / speed;
            cell.band_high = t.lower > 0.0 ? -std::log(t.lower) / speed : std::numeric_limits<double>::infinity();
            cell.inconclusive = t.exceedances < 20;
            diag.cells.push_back(cell);
        }
    }
    return diag;
}

double CumulantScan::normalized_slope(std::size_t k) const {
    std::vector<double> lx, ly;
    for (const auto& r : rows) {
        if (r.k != k) continue;
        lx.push_back(std::log(static_cast<double>(r.N)));
        ly.push_back(std::log(std::abs(r.normalized)));
    }
    if (lx.size() < 2) throw DomainError("slope needs at least two grid points");
    return least_squares(lx, ly).slope;
}

void apply_cumulant_envelope(CumulantScan& scan, std::optional<double> c0) {
    const CalibrationOptions opts;
    if (!c0) {
        std::vector<double> req;
        for (const auto& r : scan.rows) {
            if (r.k < 3 || r.holdout) continue;
            const double se = std::isfinite(r.se) ? r.se : 0.0;
            const double upper = std::abs(r.gamma_hat) + opts.z * se;
            const double k = static_cast<double>(r.k);
            const double base = upper / (static_cast<double>(r.N) * std::exp((1.0 + scan.gamma) * std::lgamma(k + 1.0)));
            req.push_back(std::pow(base, 1.0 / (k - 2.0)));
        }
        c0 = calibrate_minimal(req, opts);
    }
    scan.c0 = *c0;
    scan.pass = true;
    for (auto& r : scan.rows) {
        if (r.k < 3) {
            r.bound_log = std::numeric_limits<double>::quiet_NaN();
            r.pass = true;
            continue;
        }
        r.bound_log = noncum_bound_log(static_cast<double>(r.N), r.k, scan.c0, scan.gamma);
        const double se = std::isfinite(r.se) ? r.se : 0.0;
        const double lower = std::abs(r.gamma_hat) - opts.z * se;
        r.pass = lower <= 0.0 || std::log(lower) <= r.bound_log;
        scan.pass = scan.pass && r.pass;
    }
}

CumulantScan cumulant_scan(const Experiment& experiment, std::size_t k_max, double gamma, std::size_t holdout,
                           std::optional<double> c0) {
    experiment.validate();
    if (k_max <= 4 && experiment.replicates < 10'000) throw DomainError("cumulant scan needs at least 10^4 replicates");
    if (holdout >= experiment.n_grid.size()) throw DomainError("holdout leaves no calibration points");
    CumulantScan scan;
    scan.gamma = gamma;
    scan.holdout = holdout;
    for (std::size_t g = 0; g < experiment.n_grid.size(); ++g) {
        const std::uint64_t N = experiment.n_grid[g];
        const auto s = replicate_sums(experiment, N);
        const auto cv = sample_cumulants(s.centered, k_max);
        for (std::size_t k = 1; k <= k_max; ++k) {
            CumulantRow r;
            r.N = N;
            r.k = k;
            r.gamma_hat = cv.gamma(k);
            r.se = cv.standard_error(k);
            const double scale = std::pow(static_cast<double>(N), -static_cast<double>(k) / 2.0);
            r.normalized = r.gamma_hat * scale;
            r.normalized_se = r.se * scale;
            r.holdout = g + holdout >= experiment.n_grid.size();
            scan.rows.push_back(r);
        }
    }
    apply_cumulant_envelope(scan, c0);
    return scan;
}

double calibrate_minimal(std::span<const double> requirements, const CalibrationOptions& options) {
    double worst = 0.0;
    for (double r : requirements) {
        if (!std::isfinite(r)) throw DomainError("calibration infeasible: a requirement is unbounded");
        worst = std::max(worst, r);
    }
    return std::max(options.floor, worst * options.safety);
}

std::vector<TailRow> tail_scan(const Experiment& experiment, std::span<const double> x_grid) {
    experiment.validate();
    std::vector<TailRow> rows;
    for (std::uint64_t N : experiment.n_grid) {
        const auto s = replicate_sums(experiment, N);
        const double root = std::sqrt(static_cast<double>(N));
        for (double x : x_grid) rows.push_back({N, tail_estimate(s.centered, x * root), x});
    }
    return rows;
}

double calibrate_concentration(std::span<const TailRow> rows, double gamma, const CalibrationOptions& options) {
    std::vector<double> req;
    for (const auto& r : rows) {
        if (r.x <= 0.0 || r.tail.upper >= 1.0) continue;
        const double target = std::log(r.tail.upper);
        const auto n = static_cast<double>(r.N);
        auto ok = [&](double c) { return concentration_bound_log(r.x, n, c, c, gamma) >= target; };
        double lo = 1e-9, hi = 1.0;
        while (!ok(hi)) {
            hi *= 2.0;
            if (hi > 1e15) throw DomainError("calibration infeasible: no concentration constant dominates the tail");
        }
        if (ok(lo)) {
            req.push_back(lo);
            continue;
        }
        for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-12; ++it) {
            const double mid = std::sqrt(lo * hi);
            (ok(mid) ? hi : lo) = mid;
        }
        req.push_back(hi);
    }
    return calibrate_minimal(req, options);
}

std::vector<MomentCheckRow> moment_consistency(std::span<const double> centered, unsigned p_max, std::size_t resamples,
                                               std::uint64_t seed) {
    if (p_max < 1 || p_max > 4) throw DomainError("moment consistency covers p = 1..4");
    const auto cv = sample_cumulants(centered, p_max);
    const auto rebuilt = cumulants_to_moments(cv.cumulants);
    std::vector<MomentCheckRow> rows;
    const auto n = static_cast<double>(centered.size());
    for (unsigned p = 1; p <= p_max; ++p) {
        std::vector<double> powers(centered.size());
        for (std::size_t j = 0; j < centered.size(); ++j) powers[j] = std::pow(centered[j], static_cast<double>(p));
        MomentCheckRow row;
        row.p = p;
        row.empirical = compensated_sum(powers) / n;
        row.reconstructed = rebuilt[p - 1];
        const auto boot = bootstrap(
            centered.size(),
            [&](std::span<const std::uint32_t> counts) {
                CompensatedSum s;
                for (std::size_t j = 0; j < counts.size(); ++j)
                    if (counts[j]) s.add(static_cast<double>(counts[j]) * powers[j]);
                return s.value() / n;
            },
            resamples, stream_key(seed, p));
        row.bootstrap_se = boot.standard_error;
        row.pass = std::abs(row.empirical - row.reconstructed) <= 4.0 * row.bootstrap_se + 1e-12 * (1.0 + std::abs(row.empirical));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace nonconv
