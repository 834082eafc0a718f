#include <cmath>
#include <random>

#include "doctest.h"
#include "nonconv/bounds.hpp"
#include "nonconv/errors.hpp"
#include "nonconv/montecarlo.hpp"
#include "nonconv/presets.hpp"
#include "nonconv/statistics.hpp"

using namespace nonconv;

TEST_CASE("degenerate chain gives zero sums") {
    const auto e = presets::degenerate({10, 50}, 200, 1);
    const auto s = replicate_sums(e, 50);
    for (double v : s.sums) CHECK(v == 0.0);
}

TEST_CASE("replicate sums are reproducible and independent of workers") {
    auto e = presets::chain_indicator({128}, 500, 77);
    const auto a = replicate_sums(e, 128);
    e.workers = 4;
    const auto b = replicate_sums(e, 128);
    CHECK(a.sums == b.sums);
    CHECK(a.centered == b.centered);
    CHECK(a.exact_mean);
}

TEST_CASE("iid product preset: mean within 4 SE of zero") {
    const auto e = presets::iid_product({1024}, 100000, 5);
    const auto s = replicate_sums(e, 1024);
    RunningMoments m;
    for (double v : s.sums) m.add(v);
    CHECK(std::abs(m.mean()) < 4 * std::sqrt(m.variance() / m.count()));
}

TEST_CASE("tail estimates") {
    std::vector<double> xs(1000);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = double(i);
    CHECK(tail_estimate(xs, -1).p_hat == 1.0);
    const auto top = tail_estimate(xs, 5000);
    CHECK(top.p_hat == 0.0);
    CHECK(top.upper == doctest::Approx(3.0 / 1000).epsilon(0.25));
    std::mt19937_64 g(8);
    std::normal_distribution<double> z;
    std::vector<double> zs(100000);
    for (auto& v : zs) v = z(g);
    const auto t = tail_estimate(zs, 1.6449);
    CHECK(t.lower <= 0.05);
    CHECK(t.upper >= 0.05);
    CHECK_THROWS_AS(tail_estimate(std::span(zs).first(50), 0.0), DomainError);
}

TEST_CASE("variance growth on the independent product preset") {
    const auto e = presets::iid_product({64, 256, 1024}, 20000, 2);
    const auto fit = variance_scan(e, 1);
    // E S_N^2 = N (E xi^2)^2 = N.
    CHECK(std::abs(fit.d2 - 1.0) <= 4 * fit.d2_se);
    CHECK(fit.pass);
}

TEST_CASE("variance of classical Bernoulli sums") {
    const auto e = presets::iid_bernoulli({50, 200, 800}, 20000, 4);
    const auto fit = variance_scan(e, 1);
    CHECK(std::abs(fit.d2 - 0.25) <= 4 * fit.d2_se);
}

TEST_CASE("calibration picks the minimal constant at the conservative edge") {
    const double req[] = {0.2, 0.4, 0.1};
    CHECK(calibrate_minimal(req) == doctest::Approx(0.6));
    const double zero[] = {0.0, 0.0};
    CHECK(calibrate_minimal(zero) == doctest::Approx(1e-6));
    const double bad[] = {INFINITY};
    CHECK_THROWS_AS(calibrate_minimal(bad), DomainError);
}

TEST_CASE("concentration constants calibrated on small N hold at a larger N") {
    const double xs[] = {0.5, 1.0, 1.5, 2.0};
    const auto fit_e = presets::iid_bernoulli({256, 512, 1024, 2048, 4096}, 20000, 12);
    const auto rows = tail_scan(fit_e, xs);
    const double c = calibrate_concentration(rows, 1.0);
    const auto test_e = presets::iid_bernoulli({16384}, 20000, 13);
    for (const auto& r : tail_scan(test_e, xs))
        CHECK(r.tail.lower <= concentration_bound(r.x, double(r.N), c, c, 1.0));
}

TEST_CASE("cumulants of the symmetric product preset") {
    const auto e = presets::iid_product({64, 256}, 20000, 21);
    const auto scan = cumulant_scan(e, 4, 1.0, 0);
    for (const auto& r : scan.rows)
        if (r.k == 3) CHECK(std::abs(r.gamma_hat) <= 4 * r.se);
    // Gamma_2 is the sample variance.
    const auto s = replicate_sums(e, 64);
    RunningMoments m;
    for (double v : s.centered) m.add(v);
    for (const auto& r : scan.rows)
        if (r.k == 2 && r.N == 64) CHECK(r.gamma_hat == doctest::Approx(m.variance()).epsilon(1e-10));
}

TEST_CASE("MDP cell normalization") {
    auto e = presets::iid_bernoulli({400}, 20000, 31);
    const double x[] = {0.0, 1.0};
    const auto a = mdp_diagnostic(e, [](double n) { return std::pow(n, 0.1); }, 1.0, x);
    const auto b = mdp_diagnostic(e, [](double n) { return 2 * std::pow(n, 0.1); }, 1.0, x);
    CHECK(a.cells[0].rate == 0.0);
    // x = 0 is a median threshold: -log(about 1/2) / a_N^2, small but not 0 at finite N.
    const double a2 = std::pow(400.0, 0.2);
    CHECK(a.cells[0].normalized == doctest::Approx(-std::log(a.cells[0].p_hat) / a2).epsilon(1e-12));
    CHECK(a.cells[0].normalized <= std::log(2.5) / a2);
    CHECK(a.sequence.valid());
    // Same threshold scale for x = 0; the normalization divides by a_N^2.
    CHECK(b.cells[0].normalized == doctest::Approx(a.cells[0].normalized / 4).epsilon(1e-12));
}

TEST_CASE("moment consistency on Gaussian-like sums") {
    const auto e = presets::iid_product({256}, 20000, 41);
    const auto s = replicate_sums(e, 256);
    for (const auto& row : moment_consistency(s.centered, 4, 99, 3)) CHECK(row.pass);
}

TEST_CASE("experiment validation") {
    auto e = presets::iid_product({}, 100, 1);
    CHECK_THROWS(e.validate());
    e = presets::iid_product({10}, 0, 1);
    CHECK_THROWS(e.validate());
}

TEST_CASE("memory budget") {
    auto e = presets::iid_product({1 << 20}, 10000, 1);
    e.memory_budget_mb = 1;
    CHECK_THROWS_AS(replicate_sums(e, 1 << 20), BudgetError);
}
