#include <cmath>

#include "doctest.h"
#include "nonconv/errors.hpp"
#include "nonconv/indexing.hpp"
#include "nonconv/linalg.hpp"
#include "nonconv/observable.hpp"
#include "nonconv/presets.hpp"
#include "nonconv/rng.hpp"
#include "nonconv/statistics.hpp"

using namespace nonconv;

namespace {
MarginalLaw signs(double p_plus) {
    return MarginalLaw::of(ProcessModel::iid({1.0 - p_plus, p_plus}, {{-1.0}, {1.0}}));
}
}  // namespace

TEST_CASE("centering constants") {
    const Observable constant("const", 2, 1, [](std::span<const double>) { return 3.5; }, {});
    CHECK(centering_constant(constant, signs(0.3)).value == doctest::Approx(3.5));
    CHECK(centering_constant(Observable::product(2), signs(0.5)).value == doctest::Approx(0.0));
    CHECK(centering_constant(Observable::product(2), signs(0.75)).value == doctest::Approx(0.25));
}

TEST_CASE("telescoping components") {
    const auto law = signs(0.5);
    const auto one = decompose(Observable::sum(1), signs(0.75));
    const double x[] = {1.0};
    CHECK(one.component(1, x) == doctest::Approx(1.0 - 0.5));

    const auto prod = decompose(Observable::product(2), law);
    const double xy[] = {1.0, -1.0};
    CHECK(prod.component(2, xy) == doctest::Approx(-1.0));
    CHECK(prod.component(1, xy) == doctest::Approx(0.0));

    const auto sum = decompose(Observable::sum(2), signs(0.75));
    const double pt[] = {1.0, -1.0};
    CHECK(sum.component(1, pt) == doctest::Approx(1.0 - 0.5));
    CHECK(sum.component(2, pt) == doctest::Approx(-1.0 - 0.5));
}

TEST_CASE("property: components sum to F - Fbar") {
    const auto model = ProcessModel::iid({0.2, 0.5, 0.3}, {{-1.0}, {0.5}, {2.0}});
    const auto cf = decompose(Observable::clipped_polynomial(3, {0.1, 1.0, -0.4}, 1.5), MarginalLaw::of(model));
    for (std::uint32_t a = 0; a < 3; ++a)
        for (std::uint32_t b = 0; b < 3; ++b)
            for (std::uint32_t c = 0; c < 3; ++c) {
                const std::uint32_t t[] = {a, b, c};
                double total = 0.0;
                for (std::size_t i = 1; i <= 3; ++i) total += cf.component_at(i, t);
                CHECK(total == doctest::Approx(cf.value_at(t) - cf.fbar()).epsilon(1e-12));
            }
}

TEST_CASE("nonconventional sums vanish for constant observables and degenerate chains") {
    const Observable constant("const", 2, 1, [](std::span<const double>) { return 1.0; }, {});
    const auto model = presets::two_state_chain();
    const auto cf = decompose(constant, MarginalLaw::of(model));
    const auto fam = IndexFamily::linear(2);
    for (std::uint64_t s = 0; s < 10; ++s) CHECK(nonconv_sum(model, cf, fam, 50, s) == doctest::Approx(0.0));

    const auto one = ProcessModel::finite_markov(Matrix::from_rows({{1.0}}), {{0.7}});
    const auto cf1 = decompose(Observable::product(2), MarginalLaw::of(one));
    CHECK(nonconv_sum(one, cf1, fam, 30, 4) == doctest::Approx(0.0));
    CHECK(exact_mean_SN(one, cf1, fam, 30) == doctest::Approx(0.0));
}

TEST_CASE("exact mean of S_N against simulation") {
    const auto model = ProcessModel::finite_markov(Matrix::from_rows({{0.85, 0.15}, {0.6, 0.4}}), {{-1.0}, {1.0}});
    const auto cf = decompose(Observable::product(2), MarginalLaw::of(model));
    const auto fam = IndexFamily::linear(2);
    const double exact = exact_mean_SN(model, cf, fam, 3);
    RunningMoments m;
    for (std::uint64_t r = 0; r < 400000; ++r) m.add(nonconv_sum(model, cf, fam, 3, stream_key(17, r)));
    CHECK(std::abs(m.mean() - exact) < 4.0 * std::sqrt(m.variance() / m.count()));
    CHECK(exact_mean_SN(presets::rademacher(), decompose(Observable::product(2), signs(0.5)), fam, 25) ==
          doctest::Approx(0.0));
}

TEST_CASE("both sum routes agree") {
    const auto model = presets::two_state_chain();
    const auto cf = decompose(Observable::indicator_product(2, 0.5), MarginalLaw::of(model));
    const auto fam = IndexFamily::linear(2);
    const SumPlan plan(fam, 40);
    std::vector<std::uint32_t> st(plan.indices().size());
    for (std::uint64_t s = 0; s < 20; ++s) {
        sample_states(model, plan.indices(), s, st);
        CHECK(nonconv_sum_from_states(cf, plan, st) == doctest::Approx(nonconv_sum(model, cf, fam, 40, s)).epsilon(1e-12));
    }
}

TEST_CASE("regularity scans") {
    const auto f = Observable::product(2);
    const auto rep = scan_regularity(f, {{-1, 1}, {1, 1}, {0.5, -0.25}, {0, 0}});
    CHECK(rep.pass);
    CHECK(rep.worst_growth_ratio <= 1.0);
}

TEST_CASE("marginal moments") {
    const auto law = signs(0.5);
    CHECK(law.tau(2) == doctest::Approx(1.0));
    CHECK(law.moment_growth_holds(1.0, 0.0));
}
