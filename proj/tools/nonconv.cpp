// nonconv: simulate configs, print bound curves, run acceptance suites.
// Exit codes: 0 ok, 1 a check failed, 2 bad input, 3 resource budget exceeded.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nonconv/bounds.hpp"
#include "nonconv/config.hpp"
#include "nonconv/cumulants.hpp"
#include "nonconv/errors.hpp"
#include "nonconv/montecarlo.hpp"
#include "nonconv/report.hpp"
#include "nonconv/statistics.hpp"
#include "nonconv/verification.hpp"

namespace fs = std::filesystem;
using namespace nonconv;

namespace {

enum Exit { ok = 0, check_failed = 1, bad_input = 2, over_budget = 3 };

void log_stage(const std::string& line) { std::cerr << "[nonconv] " << line << '\n'; }

std::string join_command(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
    return s;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string config;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> replicates;
    std::vector<std::uint64_t> n_grid;
};

std::string bracketed(const std::vector<std::uint64_t>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s + "]";
}

Verdict check_sample_means(const std::vector<SumSample>& samples, CsvTable& table) {
    Verdict v = Verdict::pass;
    for (const auto& s : samples) {
        RunningMoments m;
        for (double x : s.centered) m.add(x);
        const double se = std::sqrt(m.variance() / static_cast<double>(m.count()));
        const double z = se > 0.0 ? std::abs(m.mean()) / se : (m.mean() == 0.0 ? 0.0 : INFINITY);
        const bool pass = !s.exact_mean || z <= 4.0;
        if (!pass) v = Verdict::fail;
        table.add_row({s.N, static_cast<std::uint64_t>(s.sums.size()), s.mean, s.exact_mean, m.mean(), se,
                       m.variance(), pass});
    }
    return v;
}

Verdict check_tails(const std::vector<SumSample>& samples, const RunSpec& spec, CsvTable& table) {
    std::vector<TailRow> rows;
    for (const auto& s : samples)
        for (double x : spec.tail_x) {
            TailRow r;
            r.N = s.N;
            r.x = x;
            r.tail = tail_estimate(s.centered, x * std::sqrt(static_cast<double>(s.N)));
            rows.push_back(r);
        }
    // Calibrate c1 = c2 on every N but the largest, then test the largest at the lower edge.
    const std::uint64_t held = samples.back().N;
    std::vector<TailRow> fit;
    for (const auto& r : rows)
        if (r.N != held) fit.push_back(r);
    double c = NAN;
    Verdict v = Verdict::inconclusive;
    if (!fit.empty()) {
        try {
            c = calibrate_concentration(fit, spec.gamma);
            v = Verdict::pass;
        } catch (const DomainError& e) {
            log_stage(std::string("tails: concentration constant not calibrated: ") + e.what());
        }
    }
    for (const auto& r : rows) {
        const bool holdout = r.N == held;
        const double bound = std::isnan(c) ? NAN : concentration_bound(r.x, static_cast<double>(r.N), c, c, spec.gamma);
        const bool pass = !holdout || std::isnan(c) || r.tail.lower <= bound;
        if (!pass) v = Verdict::fail;
        table.add_row({r.N, r.x, r.tail.x, static_cast<std::uint64_t>(r.tail.exceedances), r.tail.p_hat, r.tail.lower,
                       r.tail.upper, c, bound, holdout, pass});
    }
    return v;
}

int run_simulate(const SimulateArgs& a, const std::string& command) {
    const auto start = std::chrono::steady_clock::now();
    Config config = Config::load(a.config);
    if (a.seed) config.set("experiment", "seed", std::to_string(*a.seed));
    if (a.workers) config.set("experiment", "workers", std::to_string(*a.workers));
    if (a.replicates) config.set("experiment", "replicates", std::to_string(*a.replicates));
    if (!a.n_grid.empty()) config.set("experiment", "n_grid", bracketed(a.n_grid));
    if (const char* mb = std::getenv("NONCONV_BUDGET_MB")) config.set("budget", "memory_mb", mb);
    RunSpec spec = load_run(config);
    // Worker count must not change any output, so it is not part of the hash.
    Config hashed = config;
    hashed.set("experiment", "workers", "1");
    spec.config_hash = hashed.canonical_hash();
    const Experiment& e = spec.experiment;

    fs::create_directories(a.out_dir);
    RunManifest manifest;
    manifest.config_hash = spec.config_hash;
    manifest.seed = e.seed;
    manifest.version = version_string();
    manifest.command = command;
    auto emit = [&](const std::string& name, const CsvTable& t) {
        const auto path = (fs::path(a.out_dir) / name).string();
        t.write(path);
        manifest.outputs.push_back(path);
        log_stage("wrote " + path);
    };
    auto wants = [&](const char* s) { return std::find(spec.statistics.begin(), spec.statistics.end(), s) != spec.statistics.end(); };

    std::vector<SumSample> samples;
    CsvTable sums({"N", "replicate", "S_N", "centered"});
    for (std::uint64_t N : e.n_grid) {
        log_stage(e.name + ": sums at N=" + std::to_string(N));
        samples.push_back(replicate_sums(e, N));
        const auto& s = samples.back();
        for (std::size_t j = 0; j < s.sums.size(); ++j)
            sums.add_row({N, static_cast<std::uint64_t>(j), s.sums[j], s.centered[j]});
    }
    emit("sums.csv", sums);
    CsvTable summary({"N", "replicates", "subtracted_mean", "exact_mean", "centered_mean", "centered_mean_se",
                      "variance", "pass"});
    manifest.record("sums_centering", check_sample_means(samples, summary));
    emit("summary.csv", summary);

    if (wants("tails")) {
        log_stage(e.name + ": tails");
        CsvTable t({"N", "x", "threshold", "exceedances", "p_hat", "lower", "upper", "c1", "bound", "holdout", "pass"});
        manifest.record("tails_concentration", check_tails(samples, spec, t));
        emit("tails.csv", t);
    }
    if (wants("variance")) {
        log_stage(e.name + ": variance");
        CsvTable t({"N", "variance", "variance_se", "residual", "envelope", "holdout", "pass"});
        Verdict v = Verdict::inconclusive;
        try {
            std::vector<std::uint64_t> grid;
            std::vector<double> var, se;
            for (const auto& s : samples) {
                const auto cv = sample_cumulants(s.centered, 2);
                grid.push_back(s.N);
                var.push_back(cv.gamma(2));
                se.push_back(cv.standard_error(2));
            }
            const auto fit = fit_variance(grid, var, se, 1);
            for (std::size_t k = 0; k < fit.grid.size(); ++k)
                t.add_row({fit.grid[k], fit.variances[k], fit.variance_se[k], fit.residuals[k],
                           variance_envelope(static_cast<double>(fit.grid[k]), fit.envelope_constant),
                           k >= fit.calibration_points, static_cast<bool>(fit.envelope_pass[k])});
            v = fit.pass ? Verdict::pass : Verdict::fail;
        } catch (const DomainError& err) {
            log_stage(std::string("variance: ") + err.what());
        }
        manifest.record("variance_envelope", v);
        emit("variance.csv", t);
    }
    if (wants("cumulants")) {
        log_stage(e.name + ": cumulants");
        CsvTable t({"N", "k", "gamma_hat", "se", "normalized", "normalized_se", "bound_log", "holdout", "pass"});
        Verdict v = Verdict::inconclusive;
        try {
            const auto scan = cumulant_scan(e, spec.cumulant_order, spec.gamma, e.n_grid.size() > 1 ? 1 : 0);
            for (const auto& r : scan.rows)
                t.add_row({r.N, static_cast<std::uint64_t>(r.k), r.gamma_hat, r.se, r.normalized, r.normalized_se,
                           r.bound_log, r.holdout, r.pass});
            v = scan.pass ? Verdict::pass : Verdict::fail;
        } catch (const DomainError& err) {
            log_stage(std::string("cumulants: ") + err.what());
        }
        manifest.record("cumulant_envelope", v);
        emit("cumulants.csv", t);
    }
    if (wants("kolmogorov")) {
        log_stage(e.name + ": kolmogorov");
        CsvTable t({"N", "distance"});
        const auto scan = kolmogorov_scan(e);
        for (const auto& r : scan.rows) t.add_row({r.N, r.distance});
        // Decay is only judged when the slope is resolved from zero at two standard errors.
        Verdict v = Verdict::inconclusive;
        if (scan.rows.size() >= 3 && std::isfinite(scan.slope_se)) {
            if (scan.slope + 2.0 * scan.slope_se < 0.0) v = Verdict::pass;
            else if (scan.slope - 2.0 * scan.slope_se > 0.0) v = Verdict::fail;
        }
        manifest.record("kolmogorov_decay", v);
        emit("kolmogorov.csv", t);
    }

    manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto mpath = (fs::path(a.out_dir) / "manifest.json").string();
    manifest.outputs.push_back(mpath);
    manifest.write(mpath);
    for (const auto& [name, v] : manifest.checks) std::cout << name << ": " << to_string(v) << '\n';
    return manifest.failed() ? check_failed : ok;
}

// ---------------------------------------------------------------------------
// bounds

// Every option takes a list; one row is printed per combination.
struct Grid {
    std::vector<std::pair<std::string, std::vector<double>>> axes;
};

void for_each_point(const Grid& g, const std::function<void(const std::map<std::string, double>&)>& fn) {
    std::map<std::string, double> point;
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == g.axes.size()) return fn(point);
        for (double v : g.axes[k].second) {
            point[g.axes[k].first] = v;
            rec(k + 1);
        }
    };
    rec(0);
}

struct BoundCommand {
    CLI::App* app = nullptr;
    std::map<std::string, std::vector<double>> values;
    std::vector<std::string> order;
    std::vector<std::string> columns;
    std::function<std::vector<std::string>(const std::map<std::string, double>&)> row;
};

std::string cell(double v) { return format_double(v); }

void add_axis(BoundCommand& b, const std::string& name, const std::string& help, std::optional<double> fallback) {
    b.order.push_back(name);
    auto& slot = b.values[name];
    auto* opt = b.app->add_option("--" + name, slot, help)->expected(1, -1);
    if (fallback) {
        slot = {*fallback};
        opt->default_str(format_double(*fallback));
    } else {
        opt->required();
    }
}

int run_bounds(const BoundCommand& b) {
    Grid g;
    for (const auto& name : b.order) g.axes.emplace_back(name, b.values.at(name));
    std::cout << CLI::detail::join(b.order, ",") << ',' << CLI::detail::join(b.columns, ",") << '\n';
    for_each_point(g, [&](const std::map<std::string, double>& p) {
        std::vector<std::string> out;
        for (const auto& name : b.order) out.push_back(cell(p.at(name)));
        for (auto& s : b.row(p)) out.push_back(std::move(s));
        std::cout << CLI::detail::join(out, ",") << '\n';
    });
    return ok;
}

unsigned as_count(double v, const char* what) {
    if (v < 0 || v != std::floor(v) || v > 1e9) throw DomainError(std::string(what) + " must be a nonnegative integer");
    return static_cast<unsigned>(v);
}

std::vector<BoundCommand> make_bound_commands(CLI::App* bounds) {
    std::vector<BoundCommand> cmds;
    auto add = [&](const std::string& name, const std::string& help) -> BoundCommand& {
        cmds.push_back({});
        cmds.back().app = bounds->add_subcommand(name, help);
        return cmds.back();
    };
    {
        auto& b = add("berry-esseen", "sup_x |P(W <= x) - Phi(x)| <= c_gamma Delta^(-1/(1+2 gamma))");
        add_axis(b, "gamma", "cumulant growth exponent", 1.0);
        add_axis(b, "delta", "cumulant growth scale Delta", std::nullopt);
        b.columns = {"c_gamma", "bound"};
        b.row = [](const auto& p) {
            return std::vector<std::string>{cell(berry_esseen_constant(p.at("gamma"))),
                                            cell(berry_esseen_bound(p.at("delta"), p.at("gamma")))};
        };
    }
    {
        auto& b = add("moddev", "moderate deviation envelope c5 (1 + x^3) N^(-1/(2+4 gamma))");
        add_axis(b, "x", "deviation", std::nullopt);
        add_axis(b, "n", "N", std::nullopt);
        add_axis(b, "c4", "window constant", 1.0);
        add_axis(b, "c5", "envelope constant", 1.0);
        add_axis(b, "gamma", "cumulant growth exponent", 1.0);
        b.columns = {"window_edge", "envelope"};
        b.row = [](const auto& p) {
            const auto m = moddev_envelope(p.at("x"), p.at("n"), p.at("c5"), p.at("gamma"), p.at("c4"));
            return std::vector<std::string>{cell(m.window_edge), m.in_window ? cell(m.value) : "OUT_OF_WINDOW"};
        };
    }
    {
        auto& b = add("momthm", "moment deviation bound c01^p (p!)^(1+gamma) sum_u N^u p^u / (u!)^2");
        add_axis(b, "p", "moment order", std::nullopt);
        add_axis(b, "n", "N", std::nullopt);
        add_axis(b, "c0", "cumulant constant", 1.0);
        add_axis(b, "gamma", "cumulant growth exponent", 1.0);
        b.columns = {"log_bound", "bound"};
        b.row = [](const auto& p) {
            const unsigned order = as_count(p.at("p"), "p");
            return std::vector<std::string>{cell(momthm_bound_log(order, p.at("n"), p.at("c0"), p.at("gamma"))),
                                            cell(momthm_bound(order, p.at("n"), p.at("c0"), p.at("gamma")))};
        };
    }
    {
        auto& b = add("concentration", "P(Sbar_N >= x sqrt(N)) bound with constants c1, c2");
        add_axis(b, "x", "deviation on the sqrt(N) scale", std::nullopt);
        add_axis(b, "n", "N", std::nullopt);
        add_axis(b, "c1", "constant c1", 1.0);
        add_axis(b, "c2", "constant c2", 1.0);
        add_axis(b, "gamma", "cumulant growth exponent", 1.0);
        b.columns = {"log_bound", "bound"};
        b.row = [](const auto& p) {
            return std::vector<std::string>{
                cell(concentration_bound_log(p.at("x"), p.at("n"), p.at("c1"), p.at("c2"), p.at("gamma"))),
                cell(concentration_bound(p.at("x"), p.at("n"), p.at("c1"), p.at("c2"), p.at("gamma")))};
        };
    }
    {
        auto& b = add("chernoff", "P(S_N >= t + B delta2) <= exp(-t^2 / (4 B^2 N ell delta1^2))");
        add_axis(b, "t", "deviation", std::nullopt);
        add_axis(b, "n", "N", std::nullopt);
        add_axis(b, "ell", "number of index maps", 2.0);
        add_axis(b, "delta1", "delta1", 1.0);
        add_axis(b, "b", "constant B", 1.0);
        b.columns = {"lambda", "log_bound", "bound"};
        b.row = [](const auto& p) {
            const std::size_t ell = as_count(p.at("ell"), "ell");
            return std::vector<std::string>{
                cell(chernoff_optimal_lambda(p.at("t"), p.at("n"), ell, p.at("delta1"), p.at("b"))),
                cell(chernoff_tail_bound_log(p.at("t"), p.at("n"), ell, p.at("delta1"), p.at("b"))),
                cell(chernoff_tail_bound(p.at("t"), p.at("n"), ell, p.at("delta1"), p.at("b")))};
        };
    }
    {
        auto& b = add("mgf", "E exp(lambda S_N) <= exp(B lambda^2 N ell delta1 + B lambda delta2)");
        add_axis(b, "lambda", "exponent", std::nullopt);
        add_axis(b, "n", "N", std::nullopt);
        add_axis(b, "ell", "number of index maps", 2.0);
        add_axis(b, "delta1", "delta1", 1.0);
        add_axis(b, "delta2", "delta2", 1.0);
        add_axis(b, "b", "constant B", 1.0);
        b.columns = {"log_bound"};
        b.row = [](const auto& p) {
            const std::size_t ell = as_count(p.at("ell"), "ell");
            return std::vector<std::string>{
                cell(mgf_bound_log(p.at("lambda"), p.at("n"), ell, p.at("delta1"), p.at("delta2"), p.at("b")))};
        };
    }
    {
        auto& b = add("variance", "variance residual envelope C sqrt(N)");
        add_axis(b, "n", "N", std::nullopt);
        add_axis(b, "c", "constant", 1.0);
        b.columns = {"envelope"};
        b.row = [](const auto& p) { return std::vector<std::string>{cell(variance_envelope(p.at("n"), p.at("c")))}; };
    }
    return cmds;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
    std::string suite;
    VerifyOptions options;
    std::string out_dir;
};

int run_verify(const VerifyArgs& a) {
    const auto ids = suite_criteria(a.suite);
    bool all = true;
    std::printf("%-3s %-38s %-5s %9s  %s\n", "id", "criterion", "pass", "seconds", "detail");
    for (int id : ids) {
        log_stage("criterion " + std::to_string(id) + ": " + criterion_name(id));
        const auto r = run_criterion(id, a.options);
        all = all && r.pass;
        std::printf("%-3d %-38s %-5s %9.1f  %s\n", r.id, r.name.c_str(), r.pass ? "PASS" : "FAIL", r.seconds,
                    r.detail.c_str());
        std::fflush(stdout);
        if (!a.out_dir.empty()) {
            fs::create_directories(a.out_dir);
            for (const auto& [name, content] : r.tables) {
                std::ofstream out(fs::path(a.out_dir) / name, std::ios::binary);
                out << content;
            }
        }
    }
    return all ? ok : check_failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo and bound evaluation for nonconventional sums"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run the experiment described by a config file");
    simulate->add_option("config", sim.config, "config file")->required();
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_option("--workers", sim.workers, "worker threads (outputs do not depend on it)");
    simulate->add_option("--out-dir", sim.out_dir, "directory for CSV and manifest output");
    simulate->add_option("--replicates", sim.replicates, "replicates per N");
    simulate->add_option("--n-grid", sim.n_grid, "horizons N")->delimiter(',');

    auto* bounds = app.add_subcommand("bounds", "print bound values over a grid of parameters");
    bounds->require_subcommand(1);
    auto bound_cmds = make_bound_commands(bounds);

    VerifyArgs ver;
    auto* verify = app.add_subcommand("verify", "run an acceptance suite: quick, full, martingale, cumulants, mdp");
    verify->add_option("suite", ver.suite, "suite name")->required();
    verify->add_option("--workers", ver.options.workers, "worker threads");
    verify->add_option("--seed", ver.options.seed, "master seed");
    verify->add_option("--scale", ver.options.scale, "replicate count multiplier")->check(CLI::PositiveNumber);
    verify->add_option("--out-dir", ver.out_dir, "directory for per-criterion CSV tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return bad_input;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim, join_command(argc, argv));
        if (verify->parsed()) return run_verify(ver);
        for (const auto& b : bound_cmds)
            if (b.app->parsed()) return run_bounds(b);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return bad_input;
    } catch (const BudgetError& e) {
        std::cerr << "budget exceeded: " << e.what() << '\n';
        return over_budget;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return bad_input;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return check_failed;
    }
    return bad_input;
}
