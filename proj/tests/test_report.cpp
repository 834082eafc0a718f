#include <cmath>
#include <cstdlib>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "nonconv/report.hpp"

using namespace nonconv;

TEST_CASE("property: formatted doubles round-trip") {
    const double values[] = {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23, 0.0, 5e-324};
    for (double v : values) CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("CSV layout") {
    CsvTable t({"a", "b", "c"});
    t.add_row({std::uint64_t{1}, 0.5, std::string("x,y")});
    t.add_row({std::int64_t{-2}, true, std::string("plain")});
    CHECK(t.str() == "a,b,c\n1,0.5,\"x,y\"\n-2,true,plain\n");
    CHECK(t.str().find('\r') == std::string::npos);
    CHECK_THROWS(t.add_row({1.0}));
}

TEST_CASE("manifest lists every check once") {
    RunManifest m;
    m.config_hash = 0xabcdef;
    m.seed = 9;
    m.version = version_string();
    m.record("tails", Verdict::pass);
    m.record("variance", Verdict::inconclusive);
    m.record("tails", Verdict::fail);
    CHECK(m.checks.size() == 2);
    CHECK(m.failed());
    const auto j = nlohmann::json::parse(m.json());
    CHECK(j["checks"]["tails"] == "fail");
    CHECK(j["checks"]["variance"] == "inconclusive");
    CHECK(j["seed"] == 9);
    RunManifest ok;
    ok.record("variance", Verdict::inconclusive);
    CHECK_FALSE(ok.failed());
}
