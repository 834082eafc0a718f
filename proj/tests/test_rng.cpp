#include <cmath>
#include <set>

#include "doctest.h"
#include "nonconv/rng.hpp"

using namespace nonconv;

TEST_CASE("counter draws are pure functions of key and counter") {
    CounterStream a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
    CounterStream c(42, 50);
    CHECK(c() == counter_draw(42, 50));
    CHECK(a.position() == 100);
}

TEST_CASE("stream keys separate streams") {
    std::set<std::uint64_t> keys;
    for (std::uint64_t j = 0; j < 10000; ++j) keys.insert(stream_key(7, j));
    CHECK(keys.size() == 10000);
    CHECK(stream_key(7, 1) != stream_key(8, 1));
}

TEST_CASE("uniform draws have the moments of U(0,1)") {
    CounterStream s(stream_key(1, 2));
    const int n = 200000;
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        m1 += u;
        m2 += u * u;
    }
    m1 /= n;
    m2 /= n;
    // Oracle: E U = 1/2 with sd 1/sqrt(12 n); E U^2 = 1/3 with sd sqrt(4/45 / n).
    CHECK(std::abs(m1 - 0.5) < 4.0 / std::sqrt(12.0 * n));
    CHECK(std::abs(m2 - 1.0 / 3.0) < 4.0 * std::sqrt(4.0 / 45.0 / n));
}

TEST_CASE("to_unit maps the extremes into [0, 1)") {
    CHECK(to_unit(0) == 0.0);
    CHECK(to_unit(~std::uint64_t{0}) < 1.0);
    CHECK(to_unit(~std::uint64_t{0}) == doctest::Approx(1.0).epsilon(1e-15));
}
