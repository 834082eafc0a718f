#include <string>

#include "doctest.h"
#include "nonconv/config.hpp"
#include "nonconv/errors.hpp"

using namespace nonconv;

namespace {
const char* chain_text = R"(# chain
[model]
kind = finite_markov
transition = [[0.85, 0.15], [0.6, 0.4]]
values = [0, 1]

[observable]
kind = indicator_product
ell = 2
threshold = 0.5

[experiment]
n_grid = [16, 64]
replicates = 200
seed = 3
statistics = [sums, tails]
tail_x = [0.5, 1]
)";

std::size_t error_line(const std::string& text) {
    try {
        load_run(Config::parse(text));
    } catch (const ConfigError& e) {
        return e.line();
    }
    return 0;
}
}  // namespace

TEST_CASE("parse and build a run") {
    const auto c = Config::parse(chain_text);
    CHECK(c.get_matrix("model", "transition")[1][0] == 0.6);
    const auto run = load_run(c);
    CHECK(run.experiment.n_grid == std::vector<std::uint64_t>{16, 64});
    CHECK(run.experiment.replicates == 200);
    CHECK(run.statistics.size() == 2);
    CHECK(run.tail_x.size() == 2);
    CHECK(run.experiment.family->ell() == 2);
}

TEST_CASE("hash ignores layout and key order") {
    std::string shuffled = chain_text;
    shuffled.replace(shuffled.find("kind = finite_markov\n"), 21, "");
    shuffled.replace(shuffled.find("[model]\n"), 8, "[model]\nkind    =   finite_markov   ; comment\n");
    CHECK(Config::parse(shuffled).canonical_hash() == Config::parse(chain_text).canonical_hash());
    auto changed = Config::parse(chain_text);
    changed.set("experiment", "seed", "4");
    CHECK(changed.canonical_hash() != Config::parse(chain_text).canonical_hash());
}

TEST_CASE("errors carry line numbers") {
    std::string missing = chain_text;
    missing.replace(missing.find("kind = finite_markov\n"), 21, "");
    CHECK(error_line(missing) > 0);

    std::string bad = chain_text;
    bad.replace(bad.find("threshold = 0.5"), 15, "threshold = abc");
    CHECK(error_line(bad) == 10);

    std::string few = chain_text;
    few.replace(few.find("replicates = 200"), 16, "replicates = 10 ");
    CHECK(error_line(few) == 14);

    CHECK_THROWS_AS(Config::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("x = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a]\nx = [1, 2\n").get_list("a", "x"), ConfigError);
}

TEST_CASE("rejects non-primitive chains at the transition line") {
    std::string text = chain_text;
    text.replace(text.find("[[0.85, 0.15], [0.6, 0.4]]"), 26, "[[0, 1], [1, 0]]");
    CHECK(error_line(text) == 4);
}
