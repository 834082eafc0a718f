#include <cmath>

#include "doctest.h"
#include "nonconv/errors.hpp"
#include "nonconv/martingale.hpp"
#include "nonconv/montecarlo.hpp"
#include "nonconv/presets.hpp"

using namespace nonconv;

namespace {
CenteredObservable centered(const ProcessModel& m, const Observable& f) { return decompose(f, MarginalLaw::of(m)); }
}  // namespace

TEST_CASE("varphi sums") {
    const auto iid = MixingProfile::of(presets::rademacher());
    CHECK(varphi_sum(iid, 10).value() == doctest::Approx(1.0));
    const auto geo = MixingProfile::from_table({1.0, 0.5}, DecayParameters{std::log(2.0), 1.0, 1.0});
    const auto s = varphi_sum(geo, 30);
    CHECK(s.value() == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(s.tail_bound >= std::pow(0.5, 31) * 2 - 1e-18);
    CHECK(phi_tail_bound(geo, 30) == doctest::Approx(std::pow(0.5, 30)).epsilon(1e-6));
}

TEST_CASE("independent l = 1: the sum is already a martingale") {
    const auto m = presets::rademacher();
    const auto cf = centered(m, Observable::sum(1));
    const auto d = build_decomposition(m, cf, IndexFamily::linear(1), 6);
    const auto chk = check_martingale_exhaustive(d);
    CHECK(chk.pass);
    CHECK(chk.worst == doctest::Approx(0.0));
    std::vector<std::uint32_t> path{0, 1, 1, 0, 1, 0, 0};
    const auto p = d.evaluate(path);
    CHECK(p.gap() == doctest::Approx(0.0));
    for (std::size_t n = 0; n < p.length; ++n) CHECK(p.r(1, n) == doctest::Approx(0.0));
}

TEST_CASE("degenerate chain: everything vanishes") {
    const auto m = presets::single_state();
    const auto d = build_decomposition(m, centered(m, Observable::product(2)), IndexFamily::linear(2), 5);
    const auto chk = check_martingale_exhaustive(d);
    CHECK(chk.pass);
    std::vector<std::uint32_t> path(11, 0);
    CHECK(d.evaluate(path).gap() == 0.0);
}

TEST_CASE("two-state chain, l = 2, N = 8: conditional increments vanish on every past") {
    const auto m = presets::two_state_chain();
    const auto d = build_decomposition(m, centered(m, Observable::indicator_product(2, 0.5)), IndexFamily::linear(2), 8);
    const auto chk = check_martingale_exhaustive(d, 1e-8);
    CHECK(chk.pass);
    CHECK(chk.worst <= 1e-8 + 2 * d.truncation_error());
}

TEST_CASE("property: S_N - M = sum_i (R_{i,0} - R_{i,iN}) on sampled paths") {
    const auto m = presets::two_state_chain();
    const auto cf = centered(m, Observable::product(2));
    const auto d = build_decomposition(m, cf, IndexFamily::linear(2), 20);
    for (std::uint64_t j = 0; j < 25; ++j) {
        const auto path = martingale_path(d, replicate_key(3, 20, j));
        const auto p = d.evaluate(path);
        double tel = 0.0;
        for (std::size_t i = 1; i <= 2; ++i) tel += p.r(i, 0) - p.r(i, i * 20);
        CHECK(p.gap() == doctest::Approx(tel).epsilon(1e-10));
        CHECK(p.S_N == doctest::Approx(nonconv_sum(m, cf, IndexFamily::linear(2), 20, replicate_key(3, 20, j))).epsilon(1e-12));
    }
}

TEST_CASE("sampled check and gap report") {
    const auto m = presets::two_state_chain();
    const auto cf = centered(m, Observable::indicator_product(2, 0.5));
    const auto fam = IndexFamily::linear(2);
    const auto d = build_decomposition(m, cf, fam, 64);
    std::vector<std::uint64_t> keys;
    std::vector<double> sums;
    for (std::uint64_t j = 0; j < 50; ++j) {
        keys.push_back(replicate_key(9, 64, j));
        sums.push_back(nonconv_sum(m, cf, fam, 64, keys.back()));
    }
    CHECK(check_martingale_sampled(d, std::span(keys).first(5)).pass);
    const auto rep = sup_gap(d, keys, sums);
    CHECK(rep.paths == 50);
    CHECK(rep.max_telescoping_error <= 1e-9);
    sums[3] += 1.0;
    CHECK_THROWS_AS(sup_gap(d, keys, sums), DomainError);
}

TEST_CASE("doubling map with a level-L observable uses its block chain") {
    const auto m = presets::doubling(3);
    const auto cf = centered(m, Observable::product(2));
    const auto d = build_decomposition(m, cf, IndexFamily::linear(2), 2);
    CHECK(d.r() == 3);
    CHECK(check_martingale_exhaustive(d, 1e-8).pass);
}

TEST_CASE("Azuma check at lambda = 0 is trivial") {
    const auto m = presets::rademacher();
    const auto cf = centered(m, Observable::sum(1));
    const auto d = build_decomposition(m, cf, IndexFamily::linear(1), 16);
    std::vector<std::uint64_t> keys;
    for (std::uint64_t j = 0; j < 2000; ++j) keys.push_back(replicate_key(1, 16, j));
    const auto rep = sup_gap(d, keys);
    const double lambdas[] = {0.0, 0.2};
    const auto az = azuma_mgf_check(rep, lambdas, 1.0, 1.0, 1.0, 16, 1, 199, 4);
    CHECK(az.rows[0].mgf_sum == doctest::Approx(1.0));
    CHECK(az.rows[0].azuma_bound == doctest::Approx(1.0));
    // Hoeffding oracle for Rademacher sums: E exp(lambda S) = cosh(lambda)^N <= exp(N lambda^2 / 2).
    CHECK(az.rows[1].mgf_sum_lower <= std::pow(std::cosh(0.2), 16));
    CHECK(std::pow(std::cosh(0.2), 16) <= std::exp(16 * 0.04 / 2));
    CHECK(az.pass);
}
