#include <algorithm>

#include "doctest.h"
#include "nonconv/errors.hpp"
#include "nonconv/indexing.hpp"

using namespace nonconv;

TEST_CASE("rho on linear families") {
    const auto one = IndexFamily::linear(1);
    CHECK(rho(one, 7, 3) == 4);
    const auto two = IndexFamily::linear(2);
    CHECK(rho(two, 1, 2) == 0);
    CHECK(rho(two, 3, 5) == 1);
    for (std::uint64_t n = 1; n < 40; ++n)
        for (std::uint64_t m = 1; m < 40; ++m) {
            CHECK(rho(two, n, m) == rho(two, m, n));
            CHECK(rho_tilde(two, n, m) == rho(two, n, m));
        }
}

TEST_CASE("rho_tilde on polynomial families") {
    const auto sq = IndexFamily::polynomial({{0, 0, 1}});
    CHECK(rho_tilde(sq, 2, 3) == 5);
    const auto mixed = IndexFamily::polynomial({{0, 1}, {0, 0, 1}}, 2);
    CHECK(rho_tilde(mixed, 2, 4) == 0);
    CHECK_THROWS_AS(rho_tilde(mixed, 1, 4), DomainError);
}

TEST_CASE("neighborhoods") {
    const auto one = IndexFamily::linear(1);
    CHECK(neighborhood(one, 10, 100, 2) == std::vector<std::uint64_t>{8, 9, 10, 11, 12});
    const auto two = IndexFamily::linear(2);
    const auto a = neighborhood(two, 6, 100, 1);
    CHECK(std::find(a.begin(), a.end(), 3) != a.end());
    CHECK(std::find(a.begin(), a.end(), 12) != a.end());
    CHECK(a.size() <= 12);
}

TEST_CASE("property: |A_s(n, N)| <= 3 l^2 s") {
    for (std::size_t ell = 1; ell <= 3; ++ell) {
        const auto f = IndexFamily::linear(ell);
        for (std::uint64_t n = 1; n <= 60; n += 7)
            for (std::uint64_t s = 1; s <= 10; ++s) CHECK(neighborhood(f, n, 120, s).size() <= 3 * ell * ell * s);
    }
}

TEST_CASE("family validation") {
    CHECK_NOTHROW(IndexFamily::linear(3).validate(1000));
    CHECK(IndexFamily::linear(3).gaps_diverge(1 << 20));
    CHECK_FALSE(IndexFamily::polynomial({{0, 1}, {5, 1}}).gaps_diverge(1 << 20));
    const auto sparse = IndexFamily::power_sparse({{0, 1}, {0, 2}}, 2);
    CHECK(sparse.map(2, 3) == 18);
    const auto idx = IndexFamily::linear(2).index_set(1, 3);
    CHECK(idx == std::vector<std::uint64_t>{1, 2, 3, 4, 6});
}

TEST_CASE("inverse Lipschitz certificates") {
    CHECK(inverse_lipschitz_Q(IndexFamily::linear(3), 1, 500).q == doctest::Approx(1.0));
    CHECK(inverse_lipschitz_Q(IndexFamily::polynomial({{0, 0, 1}}), 1, 2000).q == doctest::Approx(1.0));
    const auto exp2 = IndexFamily::custom({[](std::uint64_t n) { return std::uint64_t{1} << n; }}, 2, "2^n");
    const auto rep = inverse_lipschitz_Q(exp2, 2, 40);
    CHECK(rep.q == doctest::Approx(1.0));
}

TEST_CASE("set distances agree") {
    const auto f = IndexFamily::linear(3);
    const std::uint64_t d1[] = {5, 9, 14};
    const std::uint64_t d2[] = {21, 33};
    CHECK(set_distance_pairwise(f, d1, d2) == set_distance_dilated(f, d1, d2));
}
