#include <cmath>
#include <random>

#include "doctest.h"
#include "nonconv/cumulants.hpp"
#include "nonconv/process.hpp"
#include "nonconv/rng.hpp"

using namespace nonconv;

TEST_CASE("cumulants of standard distributions") {
    const double normal[] = {0, 1, 0, 3, 0, 15};
    const auto g = moments_to_cumulants(normal);
    const double want[] = {0, 1, 0, 0, 0, 0};
    for (int k = 0; k < 6; ++k) CHECK(g[k] == doctest::Approx(want[k]).epsilon(1e-12));
    const double poisson[] = {2, 6, 22, 94};
    for (double c : moments_to_cumulants(poisson)) CHECK(c == doctest::Approx(2.0).epsilon(1e-12));
    const double constant[] = {1.5, 2.25, 3.375, 5.0625};
    const auto gc = moments_to_cumulants(constant);
    CHECK(gc[0] == doctest::Approx(1.5));
    for (int k = 1; k < 4; ++k) CHECK(gc[k] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("moments from cumulants") {
    const double s2 = 1.7;
    const double gauss[] = {0, s2, 0, 0};
    const auto m = cumulants_to_moments(gauss);
    CHECK(m[3] == doctest::Approx(3 * s2 * s2));
    CHECK(m[2] == doctest::Approx(0.0));
    const double lam = 0.8;
    const double pois[] = {lam, lam, lam};
    // Oracle: direct series E X^3 = sum_j j^3 e^-lam lam^j / j!.
    double direct = 0.0, term = std::exp(-lam);
    for (int j = 0; j < 60; ++j) {
        if (j > 0) term *= lam / j;
        direct += std::pow(j, 3) * term;
    }
    CHECK(cumulants_to_moments(pois)[2] == doctest::Approx(direct).epsilon(1e-12));
    CHECK(direct == doctest::Approx(lam + 3 * lam * lam + lam * lam * lam).epsilon(1e-12));
}

TEST_CASE("property: cumulant round trip") {
    CounterStream rng(5);
    for (int t = 0; t < 100; ++t) {
        const std::size_t k = 1 + rng() % 10;
        std::vector<double> g(k);
        for (auto& x : g) x = 4.0 * rng.uniform() - 2.0;
        const auto back = moments_to_cumulants(cumulants_to_moments(g));
        for (std::size_t j = 0; j < k; ++j) CHECK(back[j] == doctest::Approx(g[j]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("sample cumulants") {
    const std::vector<double> constant(500, 4.0);
    const auto c = sample_cumulants(constant, 4);
    for (std::size_t k = 2; k <= 4; ++k) CHECK(c.gamma(k) == 0.0);

    std::mt19937_64 gen(11);
    std::poisson_distribution<int> pois(3.0);
    std::vector<double> xs(1'000'000);
    for (auto& x : xs) x = pois(gen);
    const auto p = sample_cumulants(xs, 4);
    CHECK(std::abs(p.gamma(2) - 3.0) < 4 * p.standard_error(2));
    CHECK(std::abs(p.gamma(3) - 3.0) < 4 * p.standard_error(3));

    std::vector<double> small(xs.begin(), xs.begin() + 2000), scaled(small);
    for (auto& x : scaled) x *= -2.5;
    const auto a = sample_cumulants(small, 4), b = sample_cumulants(scaled, 4);
    for (std::size_t k = 1; k <= 4; ++k)
        CHECK(b.gamma(k) == doctest::Approx(std::pow(-2.5, k) * a.gamma(k)).epsilon(1e-9));
}

TEST_CASE("combinatorial lambda") {
    CHECK(gorc_lambda(0.0, 5) == 0.0);
    CHECK(gorc_lambda(0.3, 2) == doctest::Approx(0.6));
    CHECK(gorc_lambda(0.3, 4) == doctest::Approx(192 * 0.3 + 12 * 0.09));
    CHECK(std::exp(gorc_lambda_log(0.3, 6)) == doctest::Approx(gorc_lambda(0.3, 6)));
}

TEST_CASE("gamma_delta") {
    const auto iid = MixingProfile::of(ProcessModel::iid({0.5, 0.5}, {{0.0}, {1.0}}));
    CHECK(gamma_delta(6, 1, iid, 2, 1.0, MomentCase::bounded) == 0.0);
    CHECK(gamma_delta(2, 1, iid, 2, 1.0, MomentCase::bounded) == doctest::Approx(256.0));
    const auto chain = ProcessModel::finite_markov(Matrix::from_rows({{0.85, 0.15}, {0.6, 0.4}}), {{0.0}, {1.0}});
    const auto mix = MixingProfile::of(chain);
    CHECK(gamma_delta(6, 1, mix, 2, 1.0, MomentCase::bounded) == doctest::Approx(256 * phi_coefficient(chain, 2)));
}

TEST_CASE("interval dependency graphs") {
    const std::size_t n = 30;
    GorcInstance g;
    g.vertex_count = n;
    g.distance = [](std::size_t i, std::size_t j) { return std::abs(double(i) - double(j)); };
    g.norm_proxy = [](std::size_t, double) { return 0.5; };
    g.gamma = [](double, std::size_t) { return 0.0; };
    for (double s : {0.0, 1.0, 3.0, 20.0})
        CHECK(gorc_L(g, s, 2.0) == doctest::Approx(0.5 * std::min(2 * s + 1, double(n))));
    const auto b = gorc_cumulant_bound(g, 4, 2.0);
    CHECK(b.log_remainder == -INFINITY);
    CHECK(b.log_value == doctest::Approx(4 * std::log(4.0) + b.log_main));
}

TEST_CASE("noncum bound") {
    CHECK(std::exp(noncum_bound_log(50, 3, 2.0, 1.0)) == doctest::Approx(50 * 36 * 2.0));
    CHECK(std::exp(noncum_bound_log(100, 4, 2.0, 1.0, true)) == doctest::Approx(23.04));
    CHECK(noncum_bound_log(200, 5, 2, 1) >= noncum_bound_log(100, 5, 2, 1));
}

TEST_CASE("Stirling moment constant") {
    const double c = stirling_moment_constant(2, 20);
    for (unsigned k = 1; k <= 20; ++k) {
        const double lhs = std::lgamma(2.0 * k + 1);
        const double rhs = 3 * std::log(c) + 2.0 * k * std::log(2.0) + 2 * std::lgamma(k + 1.0);
        CHECK(lhs <= rhs + 1e-9);
    }
}
