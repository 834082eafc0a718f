#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nonconv/montecarlo.hpp"

namespace nonconv {

// Shared models used by the acceptance suite and the shipped configs.
namespace presets {

// P = [[0.85, 0.15], [0.6, 0.4]] on values {0, 1}.
ProcessModel two_state_chain();
// Rademacher variables: values -1, +1 with probability 1/2.
ProcessModel rademacher();
// Bernoulli(1/2) on {0, 1}.
ProcessModel fair_bernoulli();
// One state with value 0.
ProcessModel single_state();
// Doubling map with f(x) = x on level-L cells.
ProcessModel doubling(unsigned level);

// 1{xi_n = 1} 1{xi_2n = 1} over the two-state chain.
Experiment chain_indicator(std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed);
// xi_n xi_2n over Rademacher variables (Var S_N = N exactly).
Experiment iid_product(std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed);
// sum of centered Bernoulli(1/2) variables (ell = 1).
Experiment iid_bernoulli(std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed);
// Every sum vanishes.
Experiment degenerate(std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed);

Experiment make(const ProcessModel& model, const Observable& f, const IndexFamily& family,
                std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed, std::string name);

}  // namespace presets

}  // namespace nonconv
