#include <cmath>

#include "doctest.h"
#include "nonconv/errors.hpp"
#include "nonconv/linalg.hpp"
#include "nonconv/presets.hpp"
#include "nonconv/process.hpp"
#include "nonconv/rng.hpp"

using namespace nonconv;

namespace {
ProcessModel chain_9182() { return ProcessModel::finite_markov(Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}}), {{0.0}, {1.0}}); }
}  // namespace

TEST_CASE("stationary laws") {
    auto pi = stationary_distribution(Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
    CHECK(pi[0] == doctest::Approx(0.5));
    pi = stationary_distribution(Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}}));
    CHECK(pi[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(pi[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // Doubly stochastic primitive matrix: uniform fixed point.
    pi = stationary_distribution(Matrix::from_rows({{0.2, 0.5, 0.3}, {0.3, 0.2, 0.5}, {0.5, 0.3, 0.2}}));
    for (double p : pi) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("primitivity is required") {
    CHECK_FALSE(is_primitive(Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}})));
    CHECK(is_primitive(Matrix::from_rows({{0.0, 1.0}, {0.5, 0.5}})));
    CHECK_THROWS_AS(ProcessModel::finite_markov(Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}), {{0.0}, {1.0}}),
                    DomainError);
    CHECK_THROWS_AS(ProcessModel::finite_markov(Matrix::from_rows({{0.7, 0.2}, {0.5, 0.5}}), {{0.0}, {1.0}}),
                    DomainError);
}

TEST_CASE("phi of the 0.9/0.8 chain") {
    const auto m = chain_9182();
    CHECK(phi_coefficient(m, 1) == doctest::Approx(7.0 / 15.0).epsilon(1e-12));
    // Oracle: TV of the rows of P^2 from pi, computed by hand.
    const Matrix p2 = power(m.transition(), 2);
    const std::vector<double> pi{2.0 / 3.0, 1.0 / 3.0};
    double tv = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        const double row[2] = {p2(i, 0), p2(i, 1)};
        tv = std::max(tv, total_variation(row, pi));
    }
    CHECK(phi_coefficient(m, 2) == doctest::Approx(tv).epsilon(1e-12));
    CHECK(phi_bruteforce(m, 1, 1, 1) == doctest::Approx(phi_coefficient(m, 1)).epsilon(1e-12));
    CHECK(phi_bruteforce(m, 2, 2, 2) == doctest::Approx(phi_coefficient(m, 2)).epsilon(1e-12));
    CHECK(phi_coefficient(m, 50) <= 1e-6);
    CHECK(phi_coefficient(m, 0) == 1.0);
}

TEST_CASE("independent models do not mix at positive gaps") {
    const auto m = presets::rademacher();
    for (std::size_t n = 1; n < 5; ++n) {
        CHECK(phi_coefficient(m, n) == doctest::Approx(0.0));
        CHECK(alpha_coefficient(m, n) == doctest::Approx(0.0));
        CHECK(phi_bruteforce(m, n, 1, 2) == doctest::Approx(0.0));
    }
}

TEST_CASE("alpha matches enumeration and is at most phi / 2") {
    const auto m = chain_9182();
    for (std::size_t n = 1; n <= 4; ++n) {
        CHECK(alpha_coefficient(m, n) <= 0.5 * phi_coefficient(m, n) + 1e-12);
        CHECK(alpha_bruteforce(m, n, 1, 1) <= alpha_coefficient(m, n) + 1e-12);
    }
    CHECK(alpha_bruteforce(m, 1, 2, 2) == doctest::Approx(alpha_coefficient(m, 1)).epsilon(1e-9));
}

TEST_CASE("beta for chains and the doubling map") {
    CHECK(beta_approx(chain_9182(), 2.0, 3) == 0.0);
    CHECK(beta_approx(chain_9182(), INFINITY, 0) == 0.0);
    const auto d = presets::doubling(4);
    CHECK(beta_approx(d, INFINITY, 4) == 0.0);
    CHECK(beta_approx(d, INFINITY, 7) == 0.0);
}

TEST_CASE("conditional laws follow the Markov property") {
    const auto m = chain_9182();
    const std::uint64_t t1[] = {5};
    auto law = conditional_law(m, {}, t1);
    CHECK(law.table[0] == doctest::Approx(2.0 / 3.0));
    const std::pair<std::uint64_t, std::uint32_t> known[] = {{3, 1}};
    const std::uint64_t t2[] = {4};
    law = conditional_law(m, known, t2);
    CHECK(law.table[0] == doctest::Approx(0.2));
    CHECK(law.table[1] == doctest::Approx(0.8));
    const std::uint64_t t3[] = {5, 6};
    law = conditional_law(m, known, t3);
    const Matrix p = m.transition();
    const Matrix p2 = power(p, 2);
    for (std::uint32_t j = 0; j < 2; ++j)
        for (std::uint32_t k = 0; k < 2; ++k) {
            const std::uint32_t s[] = {j, k};
            CHECK(law.probability(s) == doctest::Approx(p2(1, j) * p(j, k)).epsilon(1e-12));
        }
}

TEST_CASE("sampled pairs follow pi x P") {
    const auto m = chain_9182();
    const std::uint64_t idx[] = {1, 2};
    const int reps = 200000;
    double count[2][2] = {};
    for (int r = 0; r < reps; ++r) {
        std::uint32_t st[2];
        sample_states(m, idx, stream_key(99, r), st);
        count[st[0]][st[1]] += 1.0;
    }
    const double pi[2] = {2.0 / 3.0, 1.0 / 3.0};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double p = pi[i] * m.transition()(i, j);
            const double se = std::sqrt(p * (1 - p) / reps);
            CHECK(std::abs(count[i][j] / reps - p) < 4 * se);
        }
}

TEST_CASE("sampled values do not depend on the requested index set") {
    const auto m = presets::two_state_chain();
    const std::uint64_t a[] = {3, 10, 40};
    const std::uint64_t b[] = {1, 3, 7, 10, 20, 40};
    const auto sa = sample_at_indices(m, a, 5);
    const auto sb = sample_at_indices(m, b, 5);
    for (std::uint64_t i : a) CHECK(sa.at(i)[0] == sb.at(i)[0]);
    const auto d = presets::doubling(3);
    const auto da = sample_at_indices(d, a, 5);
    const auto db = sample_at_indices(d, b, 5);
    for (std::uint64_t i : a) CHECK(da.at(i)[0] == db.at(i)[0]);
}

TEST_CASE("a single-state chain is constant") {
    const auto m = ProcessModel::finite_markov(Matrix::from_rows({{1.0}}), {{2.5}});
    const std::uint64_t idx[] = {1, 9, 1000};
    const auto s = sample_at_indices(m, idx, 3);
    for (auto i : idx) CHECK(s.at(i)[0] == 2.5);
}

TEST_CASE("decoupling is bounded by 4 phi of the gap") {
    const auto m = chain_9182();
    for (std::uint64_t g = 1; g <= 4; ++g) {
        const IndexWindow blocks[] = {{0, 1}, {1 + g, 2 + g}};
        const auto h = [](std::span<const std::uint32_t> s) { return double(s[0] * s[3]); };
        const auto rep = decoupling_check(m, blocks, {{0}, {1}}, h, 1.0);
        CHECK(rep.pass);
        CHECK(rep.difference <= 4 * phi_coefficient(m, g) + 1e-12);
        const auto same = decoupling_check(m, blocks, {{0, 1}}, h, 1.0);
        CHECK(same.difference == doctest::Approx(0.0));
    }
}

TEST_CASE("mixing profile tables") {
    const auto p = MixingProfile::from_table({1.0, 0.5, 0.25});
    CHECK(p.phi(0) == 1.0);
    CHECK(p.phi(2) == 0.25);
    CHECK(p.phi(3) == 0.0);
    CHECK(p.vanishes_past_table());
    const auto q = MixingProfile::from_table({1.0, 0.5}, DecayParameters{std::log(2.0), 1.0, 1.0});
    CHECK(q.phi(5) == doctest::Approx(std::pow(0.5, 5)));
    CHECK_FALSE(q.vanishes_past_table());
}
