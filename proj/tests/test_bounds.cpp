#include <cmath>

#include "doctest.h"
#include "nonconv/bounds.hpp"
#include "nonconv/errors.hpp"

using namespace nonconv;

TEST_CASE("Berry-Esseen constant") {
    CHECK(berry_esseen_constant(1.0) == doctest::Approx(std::cbrt(std::sqrt(2.0) / 6.0) / 6.0).epsilon(1e-14));
    CHECK(berry_esseen_constant(1.0) == doctest::Approx(0.10297).epsilon(1e-4));
    CHECK(berry_esseen_constant(1e9) == doctest::Approx(1.0 / 6.0).epsilon(1e-8));
    CHECK(berry_esseen_bound(8.0, 1.0) / berry_esseen_bound(1.0, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("moment deviation bound") {
    CHECK(momthm_bound(1, 100, 2, 1) == 0.0);
    CHECK(momthm_bound(2, 50, 1, 1) == 0.0);
    CHECK(momthm_bound(3, 100, 2, 1) == doctest::Approx(86400.0));
    // c01 = max(1, c0)
    CHECK(momthm_bound(3, 100, 0.5, 1) == doctest::Approx(36.0 * 100 * 3));
    // p = 5: terms u = 1, 2 added by hand.
    const double direct = std::pow(2.0, 5) * std::pow(120.0, 2) * (100 * 5 + 100.0 * 100 * 25 / 4);
    CHECK(momthm_bound(5, 100, 2, 1) == doctest::Approx(direct));
}

TEST_CASE("variance envelope") {
    CHECK(variance_envelope(1, 3.0) == 3.0);
    CHECK(variance_envelope(400, 3.0) == doctest::Approx(2 * variance_envelope(100, 3.0)));
}

TEST_CASE("concentration bound") {
    CHECK(concentration_bound(0, 100, 1, 1, 1) == 1.0);
    const double limit = std::exp(-4.0 / (2 * std::pow(1.3, 1.5)));
    CHECK(concentration_bound(2, 1e12, 1.3, 0.7, 1) == doctest::Approx(limit).epsilon(0.03));
    CHECK(concentration_bound(2, 1e36, 1.3, 0.7, 1) == doctest::Approx(limit).epsilon(1e-5));
    // property: decreasing in x, increasing in c1
    for (double x = 0.1; x < 5; x += 0.3) {
        CHECK(concentration_bound(x + 0.1, 1000, 1, 1, 1) <= concentration_bound(x, 1000, 1, 1, 1));
        CHECK(concentration_bound(x, 1000, 1.5, 1, 1) >= concentration_bound(x, 1000, 1, 1, 1));
    }
}

TEST_CASE("linear deviation regime") {
    const double gamma = 1.0, eps = 0.1;
    const auto k = linear_deviation_constants(1.0, 1.0, gamma);
    CHECK(k.c6 > 0);
    CHECK(k.c7 > 0);
    // The concentration bound at x = eps sqrt(N) dominates exp(-c7 (eps N)^{1/(1+gamma)}) past the threshold.
    const double n0 = linear_deviation_threshold(eps, k.c6, gamma);
    for (double N = std::max(n0, 10.0); N < n0 * 1e6; N *= 10) {
        const double lb = concentration_bound_log(eps * std::sqrt(N), N, 1.0, 1.0, gamma);
        CHECK(lb <= linear_deviation_bound_log(eps, N, k.c7, gamma) + 1e-9);
    }
    // Shape: log-bound / (eps N)^{1/(1+gamma)} settles as N grows.
    const auto ratio = [&](double N) {
        return concentration_bound_log(eps * std::sqrt(N), N, 1.0, 1.0, gamma) / std::sqrt(eps * N);
    };
    CHECK(std::abs(ratio(1e16) - ratio(1e15)) < 0.05 * std::abs(ratio(1e15)));
}

TEST_CASE("Chernoff tail") {
    CHECK(chernoff_tail_bound(0, 100, 2, 1, 1) == 1.0);
    const double a = chernoff_tail_bound_log(3, 100, 2, 1.5, 0.7);
    const double b = chernoff_tail_bound_log(6, 100, 2, 1.5, 0.7);
    CHECK(b / a == doctest::Approx(4.0));
    // The optimal lambda minimizes -lambda t + B^2 lambda^2 N l delta1^2 and reproduces the tail.
    const double t = 5, N = 64, d1 = 1.2, B = 0.9;
    const double lam = chernoff_optimal_lambda(t, N, 2, d1, B);
    const auto obj = [&](double l) { return -l * t + B * B * l * l * N * 2 * d1 * d1; };
    CHECK(obj(lam) <= obj(lam * 1.01));
    CHECK(obj(lam) <= obj(lam * 0.99));
    CHECK(obj(lam) == doctest::Approx(chernoff_tail_bound_log(t, N, 2, d1, B)));
    const double c = chernoff_linear_rate(2, d1, B);
    const double eps = 0.3;
    CHECK(-c * eps * eps * N == doctest::Approx(chernoff_tail_bound_log(eps * N / 2, N, 2, d1, B)));
}

TEST_CASE("MGF display") {
    CHECK(mgf_bound_log(0, 10, 2, 1, 1, 1) == 0.0);
    CHECK(mgf_bound_log(0.5, 10, 2, 1.5, 0.5, 2) == doctest::Approx(2 * 0.25 * 10 * 2 * 1.5 + 2 * 0.5 * 0.5));
}

TEST_CASE("moderate deviation envelope window") {
    const auto at0 = moddev_envelope(0, 1e6, 2.0, 1.0, 3.0);
    CHECK(at0.in_window);
    CHECK(at0.value == doctest::Approx(2.0 / 10.0));
    CHECK(at0.window_edge == doctest::Approx(30.0));
    CHECK_FALSE(moddev_envelope(999, 100, 1, 1, 1).in_window);
    double prev = 0;
    for (double x = 0; x < 20; x += 0.5) {
        const auto v = moddev_envelope(x, 1e6, 2.0, 1.0, 3.0);
        CHECK(v.value >= prev);
        prev = v.value;
    }
}

TEST_CASE("MDP rate and sequences") {
    CHECK(mdp_rate(0) == 0.0);
    CHECK(mdp_rate(2) == 2.0);
    CHECK(mdp_speed(3) == 9.0);
    CHECK(check_mdp_sequence([](double n) { return std::pow(n, 0.1); }, 1.0).valid());
    CHECK_FALSE(check_mdp_sequence([](double n) { return std::pow(n, 0.3); }, 1.0).valid());
    CHECK_FALSE(check_mdp_sequence([](double) { return 2.0; }, 1.0).valid());
}

TEST_CASE("assumption constants") {
    BoundConstants k;
    k.set("c0", 2.0, NamedConstant::Source::calibrated, "from a scan");
    CHECK(k.get("c0") == 2.0);
    CHECK_THROWS_AS(k.set("not_a_constant", 1.0, NamedConstant::Source::configured), DomainError);
    CHECK_THROWS_AS(k.get("c1"), DomainError);
}

TEST_CASE("growth exponent gamma") {
    AssumptionParams p;
    p.eta = 0.5;
    CHECK(p.gamma() == doctest::Approx(2.0));
    p.sparse_power = 2;
    CHECK(p.gamma() == doctest::Approx(0.5));
}
