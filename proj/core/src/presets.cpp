#include "nonconv/presets.hpp"

namespace nonconv::presets {

ProcessModel two_state_chain() {
    return ProcessModel::finite_markov(Matrix::from_rows({{0.85, 0.15}, {0.6, 0.4}}), {{0.0}, {1.0}});
}

ProcessModel rademacher() { return ProcessModel::iid({0.5, 0.5}, {{-1.0}, {1.0}}); }

ProcessModel fair_bernoulli() { return ProcessModel::iid({0.5, 0.5}, {{0.0}, {1.0}}); }

ProcessModel single_state() { return ProcessModel::finite_markov(Matrix::from_rows({{1.0}}), {{0.0}}); }

ProcessModel doubling(unsigned level) { return ProcessModel::doubling_map(DyadicObservable::identity(level)); }

Experiment make(const ProcessModel& model, const Observable& f, const IndexFamily& family,
                std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed, std::string name) {
    Experiment e;
    e.name = std::move(name);
    e.model = std::make_shared<const ProcessModel>(model);
    e.observable = std::make_shared<const CenteredObservable>(decompose(f, MarginalLaw::of(model)));
    e.family = std::make_shared<const IndexFamily>(family);
    e.n_grid = std::move(n_grid);
    e.replicates = replicates;
    e.seed = seed;
    return e;
}

Experiment chain_indicator(std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed) {
    return make(two_state_chain(), Observable::indicator_product(2, 0.5), IndexFamily::linear(2), std::move(n_grid),
                replicates, seed, "chain_indicator");
}

Experiment iid_product(std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed) {
    return make(rademacher(), Observable::product(2), IndexFamily::linear(2), std::move(n_grid), replicates, seed,
                "iid_product");
}

Experiment iid_bernoulli(std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed) {
    return make(fair_bernoulli(), Observable::sum(1), IndexFamily::linear(1), std::move(n_grid), replicates, seed,
                "iid_bernoulli");
}

Experiment degenerate(std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed) {
    return make(single_state(), Observable::product(2), IndexFamily::linear(2), std::move(n_grid), replicates, seed,
                "degenerate");
}

}  // namespace nonconv::presets
