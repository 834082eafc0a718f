#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "nonconv/statistics.hpp"

using namespace nonconv;

TEST_CASE("compensated summation") {
    std::vector<double> v{1e16, 1.0, -1e16, 1.0};
    CHECK(compensated_sum(v) == 2.0);
}

TEST_CASE("running moments") {
    RunningMoments m;
    for (double x : {1.0, 2.0, 3.0, 4.0}) m.add(x);
    CHECK(m.mean() == 2.5);
    CHECK(m.variance() == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("normal functions") {
    CHECK(normal_cdf(0) == doctest::Approx(0.5));
    CHECK(normal_sf(1.6448536269514722) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_sf(30) > 0.0);
}

TEST_CASE("Clopper-Pearson endpoints") {
    const auto zero = clopper_pearson(0, 1000);
    CHECK(zero.lower == 0.0);
    CHECK(zero.upper == doctest::Approx(1 - std::pow(0.025, 1.0 / 1000)).epsilon(1e-9));
    CHECK(zero.upper < 3.7 / 1000);
    const auto all = clopper_pearson(50, 50);
    CHECK(all.upper == 1.0);
    const auto mid = clopper_pearson(30, 100);
    CHECK(mid.lower < 0.3);
    CHECK(mid.upper > 0.3);
}

TEST_CASE("Kolmogorov distance") {
    std::mt19937_64 g(3);
    std::normal_distribution<double> z;
    std::vector<double> xs(100000);
    for (auto& x : xs) x = z(g);
    const double d = kolmogorov_distance(xs, 0.0, 1.0);
    CHECK(d <= 3 * 1.36 / std::sqrt(100000.0));
    std::vector<double> scaled(xs);
    for (auto& x : scaled) x = 3 * x + 7;
    CHECK(kolmogorov_distance(scaled, 7.0, 3.0) == doctest::Approx(d).epsilon(1e-9));
    const std::vector<double> c(10, 0.4);
    CHECK(kolmogorov_distance(c, 0.0, 1.0) == doctest::Approx(std::max(normal_cdf(0.4), 1 - normal_cdf(0.4))));
}
