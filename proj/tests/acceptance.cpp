// Acceptance criteria runner: one PASS/FAIL line per criterion.
//   nonconv_acceptance            all criteria
//   nonconv_acceptance 4 7        the listed criteria
// Environment: NONCONV_WORKERS (default 1), NONCONV_SCALE (default 1).

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include "nonconv/verification.hpp"

int main(int argc, char** argv) {
    nonconv::VerifyOptions options;
    if (const char* w = std::getenv("NONCONV_WORKERS")) options.workers = std::strtoul(w, nullptr, 10);
    if (const char* s = std::getenv("NONCONV_SCALE")) options.scale = std::strtod(s, nullptr);

    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
    if (ids.empty())
        for (int id = 1; id <= nonconv::criterion_count; ++id) ids.push_back(id);

    int failures = 0;
    for (int id : ids) {
        try {
            const auto r = nonconv::run_criterion(id, options);
            std::printf("criterion %2d %-5s %s (%.1fs): %s\n", r.id, r.pass ? "PASS" : "FAIL", r.name.c_str(),
                        r.seconds, r.detail.c_str());
            failures += !r.pass;
        } catch (const std::exception& e) {
            std::printf("criterion %2d FAIL error: %s\n", id, e.what());
            ++failures;
        }
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
