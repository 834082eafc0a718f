#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "nonconv/linalg.hpp"

namespace nonconv {

enum class ModelKind { finite_markov, doubling_map, iid };

std::string_view to_string(ModelKind kind);

// Observable on [0,1) for the doubling map, evaluated at the midpoint of
// the level-L dyadic cell containing the point.
struct DyadicObservable {
    unsigned level = 1;
    std::size_t dimension = 1;
    std::function<void(double, std::span<double>)> function;
    double holder_constant = 1.0;
    double holder_exponent = 1.0;
    // f is constant on level-L cells (tabulated input), so measurability is exact at resolution L.
    bool piecewise_constant = false;

    static DyadicObservable from_table(const std::vector<std::vector<double>>& cell_values);
    static DyadicObservable identity(unsigned level);
};

// Stationary process generator. Immutable after construction.
//
// finite_markov: transition matrix P (S <= 64 states) and a value table
// v: state -> R^dim; the path starts from the stationary law at index 0.
// iid: a finite law mu, represented as a chain whose rows all equal mu.
// doubling_map: xi_n = f(T^n x) with x uniform, where T^n x is read from
// a reservoir of random bits starting at bit n. State ids are level-L
// dyadic cells.
class ProcessModel {
public:
    static constexpr std::size_t max_chain_states = 64;
    static constexpr unsigned max_dyadic_level = 30;

    static ProcessModel finite_markov(Matrix transition, std::vector<std::vector<double>> values);
    static ProcessModel iid(std::vector<double> law, std::vector<std::vector<double>> values);
    static ProcessModel doubling_map(DyadicObservable observable);

    ModelKind kind() const noexcept { return kind_; }
    std::size_t dimension() const noexcept { return dimension_; }
    // S for chains and iid laws, 2^L for the doubling map.
    std::size_t state_count() const noexcept { return states_; }
    bool has_transition() const noexcept { return kind_ != ModelKind::doubling_map; }

    const Matrix& transition() const;
    std::span<const double> stationary() const;
    std::span<const double> state_value(std::size_t state) const;
    const DyadicObservable& dyadic() const;

    // Finite chain on level-L bit windows equivalent to a doubling map
    // (uniform stationary law, shift transitions). Requires L <= 6 (64 states).
    ProcessModel block_chain() const;

    // Inverse-CDF helpers used by the samplers.
    std::uint32_t draw_initial(double u) const;
    std::uint32_t draw_next(std::uint32_t from, double u) const;

private:
    ProcessModel() = default;
    void build_cdfs();

    ModelKind kind_ = ModelKind::finite_markov;
    std::size_t dimension_ = 1;
    std::size_t states_ = 0;
    Matrix transition_;
    std::vector<double> stationary_;
    std::vector<double> values_;  // states_ x dimension_ (cached cells for the doubling map)
    std::vector<double> initial_cdf_;
    std::vector<double> row_cdf_;
    std::optional<DyadicObservable> dyadic_;
};

// Unique stationary law of a primitive (irreducible, aperiodic) row-stochastic matrix.
std::vector<double> stationary_distribution(const Matrix& transition);

// True when some power of the matrix is entrywise positive.
bool is_primitive(const Matrix& transition);

struct SamplingBudget {
    std::uint64_t max_index = std::uint64_t{1} << 36;
};

// Realization of xi_n at a sorted set of indices.
struct IndexedSample {
    std::vector<std::uint64_t> indices;
    std::vector<std::uint32_t> states;
    std::vector<double> values;  // indices.size() x dimension
    std::size_t dimension = 1;

    std::span<const double> at(std::uint64_t index) const;
};

// Deterministic in (model, seed). Values at an index do not depend on
// which other indices are requested: chains consume draw k at step k,
// iid draws and reservoir bits are addressed by index.
IndexedSample sample_at_indices(const ProcessModel& model, std::span<const std::uint64_t> indices,
                                std::uint64_t seed, SamplingBudget budget = {});

// State ids only, written into `out` (same length as `indices`, which must be sorted ascending).
void sample_states(const ProcessModel& model, std::span<const std::uint64_t> indices, std::uint64_t key,
                   std::span<std::uint32_t> out);

// Path xi_0..xi_length-1 of state ids for a chain (finite_markov or iid).
std::vector<std::uint32_t> sample_path(const ProcessModel& model, std::size_t length, std::uint64_t key);

struct DecayParameters {
    double a = 1.0;
    double d = 1.0;
    double eta = 1.0;
};

// Mixing coefficients phi(n), alpha(n) and approximation rates beta_q(r).
// phi(0) = 1 by convention.
class MixingProfile {
public:
    static MixingProfile of(const ProcessModel& model);
    // Explicit phi table (phi[0] is ignored and treated as 1); values past the end are 0
    // unless decay parameters are given, in which case d*exp(-a n^eta) is used.
    static MixingProfile from_table(std::vector<double> phi, std::optional<DecayParameters> decay = {});

    double phi(std::size_t n) const;
    double alpha(std::size_t n) const;
    double beta(double q, std::size_t r) const;
    // phi(n) + beta_kappa(n)^kappa, the quantity bounded under the bounded-observable assumption.
    double phi_plus_beta(std::size_t n, double kappa) const;

    const std::optional<DecayParameters>& decay() const noexcept { return decay_; }
    bool doeblin() const noexcept { return doeblin_; }
    // Length of the exact phi table (values beyond it come from the closed form or decay bound).
    std::size_t table_length() const noexcept { return phi_.size(); }
    // True when phi(n) = 0 for every n >= table_length().
    bool vanishes_past_table() const noexcept;

private:
    enum class Source { chain, table, independent, doubling };
    Source source_ = Source::table;
    std::vector<double> phi_;
    std::optional<Matrix> transition_;
    std::vector<double> stationary_;
    std::optional<DecayParameters> decay_;
    bool doeblin_ = false;
    double holder_constant_ = 0.0;
    double holder_exponent_ = 1.0;
    unsigned dyadic_level_ = 0;
};

// max_i TV(P^n(i,.), pi); 1 at n = 0. Requires a chain (finite_markov or iid).
double phi_coefficient(const ProcessModel& model, std::size_t n);

// Exact supremum of |P(A and B)/P(A) - P(B)| over past cylinders of length
// past_window ending at k and unions of future cylinders of length
// future_window starting at k + n, by enumeration.
double phi_bruteforce(const ProcessModel& model, std::size_t n, std::size_t past_window,
                      std::size_t future_window);

// sup |P(A and B) - P(A)P(B)| between past and future sigma-algebras at gap n.
double alpha_coefficient(const ProcessModel& model, std::size_t n);

// Same supremum restricted to unions of cylinders within the windows, by enumeration of both sides.
double alpha_bruteforce(const ProcessModel& model, std::size_t n, std::size_t past_window,
                        std::size_t future_window);

// beta_q(r); q may be +infinity.
double beta_approx(const ProcessModel& model, double q, std::size_t r);

struct JointLaw {
    std::vector<std::uint64_t> targets;
    std::size_t state_count = 0;
    std::vector<double> table;  // row-major, first target varies slowest

    double probability(std::span<const std::uint32_t> states) const;
};

inline constexpr std::size_t default_table_budget = 1'000'000;

// Exact joint conditional law of the chain at `targets` given known (index, state) pairs.
JointLaw conditional_law(const ProcessModel& model,
                         std::span<const std::pair<std::uint64_t, std::uint32_t>> known,
                         std::span<const std::uint64_t> targets,
                         std::size_t table_budget = default_table_budget);

struct IndexWindow {
    std::uint64_t first = 0;
    std::uint64_t last = 0;
};

struct DecouplingReport {
    double difference = 0.0;  // |E H(U) - E H(U^(a))|
    double bound = 0.0;       // 4 sup|H| sum_{i>=2} phi(m_i - n_{i-1})
    bool pass = false;
};

using BlockFunction = std::function<double(std::span<const std::uint32_t>)>;

// Compares E H(U_1..U_L) with the expectation under independent copies of
// each group of blocks. H receives the states of all block indices in order.
DecouplingReport decoupling_check(const ProcessModel& model, std::span<const IndexWindow> blocks,
                                  const std::vector<std::vector<std::size_t>>& groups, const BlockFunction& h,
                                  double sup_h, double tol = 1e-12,
                                  std::size_t table_budget = default_table_budget);

// f(x, omega) tabulated on a grid of x values and the future cylinders of
// length future_window (S^future_window columns per grid point).
struct FiberFunction {
    std::vector<double> grid;
    std::size_t future_window = 1;
    std::vector<double> values;  // grid.size() x S^future_window
    double holder_exponent = 1.0;
};

struct FiberReport {
    double deviation = 0.0;  // sup_x |E[f(x,.)|G] - E f(x,.)|
    double constant = 0.0;   // C: sup norm and Hoelder constant of f on the grid
    double bound = 0.0;      // 2 C phi(gap)
    bool pass = false;
};

FiberReport fiber_conditional_check(const ProcessModel& model, std::size_t gap, const FiberFunction& f,
                                    double tol = 1e-12, std::size_t table_budget = default_table_budget);

}  // namespace nonconv
