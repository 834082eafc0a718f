#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nonconv/indexing.hpp"
#include "nonconv/process.hpp"

namespace nonconv {

// Regularity data: |F(x)| <= K[1 + sum |x_i|^lambda] and
// |F(x) - F(z)| <= K[1 + sum(|x_i|^lambda + |z_i|^lambda)] sum |x_i - z_i|^kappa.
struct Regularity {
    double K = 1.0;
    double kappa = 1.0;
    unsigned lambda = 0;
};

// F : (R^dim)^ell -> R. Arguments arrive flattened: coordinate i occupies [i*dim, (i+1)*dim).
class Observable {
public:
    using Evaluator = std::function<double(std::span<const double>)>;

    Observable(std::string name, std::size_t ell, std::size_t dimension, Evaluator f, Regularity regularity,
               bool product_form = false);

    // prod_i x_i (first coordinate of each argument).
    static Observable product(std::size_t ell, double bound = 1.0);
    // sum_i x_i.
    static Observable sum(std::size_t ell, double bound = 1.0);
    // prod_i 1{x_i >= threshold}: counts l-tuples of visits to a set.
    static Observable indicator_product(std::size_t ell, double threshold);
    // clamp(p(x_1 + ... + x_l), -clip, clip) with p given by coefficients from the constant term up.
    static Observable clipped_polynomial(std::size_t ell, std::vector<double> coefficients, double clip);

    const std::string& name() const noexcept { return name_; }
    std::size_t ell() const noexcept { return ell_; }
    std::size_t dimension() const noexcept { return dimension_; }
    const Regularity& regularity() const noexcept { return regularity_; }
    bool product_form() const noexcept { return product_form_; }

    double operator()(std::span<const double> x) const { return f_(x); }

private:
    std::string name_;
    std::size_t ell_;
    std::size_t dimension_;
    Evaluator f_;
    Regularity regularity_;
    bool product_form_;
};

struct RegularityScan {
    std::size_t points = 0;
    double worst_growth_ratio = 0.0;  // max |F(x)| / (K[1 + sum|x_i|^lambda])
    double worst_holder_ratio = 0.0;  // max over pairs of the Hoelder quotient divided by its bound
    bool pass = false;
};

// Checks the growth and Hoelder bounds on the given points (each ell*dim long) and all pairs among them.
RegularityScan scan_regularity(const Observable& f, const std::vector<std::vector<double>>& points);

// Finite marginal law: atoms in R^dim with weights.
struct MarginalLaw {
    std::vector<std::vector<double>> atoms;
    std::vector<double> weights;

    static MarginalLaw of(const ProcessModel& model);
    std::size_t size() const noexcept { return atoms.size(); }
    std::size_t dimension() const { return atoms.at(0).size(); }
    // tau_k = (E |xi|^k)^{1/k} with the Euclidean norm.
    double tau(double k) const;
    // tau_k^k <= M^k (k!)^zeta for k = 1..k_max.
    bool moment_growth_holds(double M, double zeta, unsigned k_max = 20) const;
};

inline constexpr std::size_t default_tensor_budget = 10'000'000;

struct MonteCarloBudget {
    std::size_t nodes = 0;  // 0 forbids the Monte Carlo fallback
    std::uint64_t seed = 0;
};

struct CenteringResult {
    double value = 0.0;
    double standard_error = 0.0;
    bool exact = true;
};

CenteringResult centering_constant(const Observable& f, const MarginalLaw& mu, MonteCarloBudget mc = {},
                                   std::size_t tensor_budget = default_tensor_budget);

// F together with Fbar and the telescoping components
// F_i(x_1..x_i) = G_i(x_1..x_i) - G_{i-1}(x_1..x_{i-1}), where G_i integrates the last
// ell - i arguments against mu, G_0 = Fbar and G_ell = F.
class CenteredObservable {
public:
    const Observable& observable() const noexcept { return *f_; }
    const MarginalLaw& law() const noexcept { return *law_; }
    double fbar() const noexcept { return fbar_; }
    double fbar_standard_error() const noexcept { return fbar_se_; }
    bool exact() const noexcept { return exact_; }
    std::size_t ell() const noexcept { return f_->ell(); }

    // G_i and F_i at arbitrary points; x holds at least i coordinates (flattened).
    double integrated(std::size_t i, std::span<const double> x) const;
    double component(std::size_t i, std::span<const double> x) const;

    // Table lookups on atom indices (exact case only): atoms[t] indexes the law's atoms.
    double integrated_at(std::size_t i, std::span<const std::uint32_t> atoms) const;
    double component_at(std::size_t i, std::span<const std::uint32_t> atoms) const;
    double value_at(std::span<const std::uint32_t> atoms) const { return integrated_at(ell(), atoms); }
    // Raw table of G_i over atom tuples, first argument slowest.
    const std::vector<double>& table(std::size_t i) const;

    friend CenteredObservable decompose(const Observable&, const MarginalLaw&, MonteCarloBudget, std::size_t);

private:
    std::shared_ptr<const Observable> f_;
    std::shared_ptr<const MarginalLaw> law_;
    double fbar_ = 0.0;
    double fbar_se_ = 0.0;
    bool exact_ = true;
    std::vector<std::vector<double>> tables_;  // tables_[i] = G_i over atoms^i (exact case)
    std::vector<std::vector<double>> nodes_;   // Monte Carlo nodes: ell*dim each
};

CenteredObservable decompose(const Observable& f, const MarginalLaw& mu, MonteCarloBudget mc = {},
                             std::size_t tensor_budget = default_tensor_budget);

// Precomputed index bookkeeping for repeated evaluation of S_N on one (family, N).
class SumPlan {
public:
    SumPlan(const IndexFamily& family, std::uint64_t N);

    std::uint64_t N() const noexcept { return N_; }
    std::size_t ell() const noexcept { return ell_; }
    const std::vector<std::uint64_t>& indices() const noexcept { return indices_; }
    // Position in indices() of q_i(n), i = 1..ell, n = 1..N (row n-1, column i-1).
    std::uint32_t slot(std::uint64_t n, std::size_t i) const { return slots_[(n - 1) * ell_ + (i - 1)]; }

private:
    std::uint64_t N_;
    std::size_t ell_;
    std::vector<std::uint64_t> indices_;
    std::vector<std::uint32_t> slots_;
};

// S_N = sum_{n=1}^N (F(xi_{q_1(n)}, ..., xi_{q_l(n)}) - Fbar) along the path with the given seed.
double nonconv_sum(const ProcessModel& model, const CenteredObservable& cf, const IndexFamily& family,
                   std::uint64_t N, std::uint64_t seed, SamplingBudget budget = {});

// Same sum from states already sampled at plan.indices() (exact observables only).
double nonconv_sum_from_states(const CenteredObservable& cf, const SumPlan& plan,
                               std::span<const std::uint32_t> states);

// E S_N computed from exact joint laws of (xi_{q_1(n)}, ..., xi_{q_l(n)}).
double exact_mean_SN(const ProcessModel& model, const CenteredObservable& cf, const IndexFamily& family,
                     std::uint64_t N);

}  // namespace nonconv
