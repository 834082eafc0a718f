#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nonconv {

struct VerifyOptions {
    std::size_t workers = 1;
    // Multiplies every replicate count (floored at each statistic's minimum); 1 is the acceptance scale.
    double scale = 1.0;
    std::uint64_t seed = 20240611;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    std::vector<std::pair<std::string, std::string>> tables;  // file name, CSV content
};

inline constexpr int criterion_count = 10;

std::string criterion_name(int id);
CriterionResult run_criterion(int id, const VerifyOptions& options = {});

// quick, full, martingale, cumulants, mdp. Unknown names raise DomainError.
std::vector<int> suite_criteria(const std::string& suite);

}  // namespace nonconv
