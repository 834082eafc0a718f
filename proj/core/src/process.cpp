#include "nonconv/process.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "nonconv/errors.hpp"
#include "nonconv/rng.hpp"

namespace nonconv {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::finite_markov: return "finite-markov";
        case ModelKind::doubling_map: return "doubling-map";
        case ModelKind::iid: return "iid";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Dyadic observables

DyadicObservable DyadicObservable::from_table(const std::vector<std::vector<double>>& cell_values) {
    const std::size_t cells = cell_values.size();
    if (cells < 2 || !std::has_single_bit(cells)) throw DomainError("dyadic table size must be a power of two >= 2");
    const unsigned level = static_cast<unsigned>(std::countr_zero(cells));
    if (level > ProcessModel::max_dyadic_level) throw DomainError("dyadic level above 30");
    const std::size_t dim = cell_values.front().size();
    if (dim == 0) throw DomainError("observable dimension must be positive");
    double oscillation = 0.0;
    for (const auto& row : cell_values) {
        if (row.size() != dim) throw DomainError("ragged dyadic table");
        for (std::size_t c = 0; c < dim; ++c)
            for (const auto& other : cell_values) oscillation = std::max(oscillation, std::abs(row[c] - other[c]));
    }
    DyadicObservable obs;
    obs.level = level;
    obs.dimension = dim;
    obs.function = [cell_values, cells](double x, std::span<double> out) {
        auto cell = static_cast<std::size_t>(x * static_cast<double>(cells));
        cell = std::min(cell, cells - 1);
        std::copy(cell_values[cell].begin(), cell_values[cell].end(), out.begin());
    };
    // A step function is kappa-Hoelder only in the trivial sense |f(x)-f(y)| <= osc.
    obs.holder_constant = oscillation;
    obs.holder_exponent = 1.0;
    obs.piecewise_constant = true;
    return obs;
}

DyadicObservable DyadicObservable::identity(unsigned level) {
    DyadicObservable obs;
    obs.level = level;
    obs.dimension = 1;
    obs.function = [](double x, std::span<double> out) { out[0] = x; };
    obs.holder_constant = 1.0;
    obs.holder_exponent = 1.0;
    return obs;
}

// ---------------------------------------------------------------------------
// Stationary law

namespace {

void validate_stochastic(const Matrix& p) {
    if (p.rows() == 0 || p.rows() != p.cols()) throw DomainError("transition matrix must be square and nonempty");
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double sum = 0.0;
        for (double v : p.row(i)) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("transition matrix has a negative or non-finite entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw DomainError("transition matrix row " + std::to_string(i) + " does not sum to 1");
    }
}

using BoolRows = std::vector<std::uint64_t>;

BoolRows bool_square(const BoolRows& a) {
    BoolRows c(a.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::uint64_t row = a[i];
        while (row) {
            const int k = std::countr_zero(row);
            c[i] |= a[static_cast<std::size_t>(k)];
            row &= row - 1;
        }
    }
    return c;
}

}  // namespace

bool is_primitive(const Matrix& transition) {
    const std::size_t s = transition.rows();
    if (s > 64) throw DomainError("primitivity check supports at most 64 states");
    BoolRows a(s, 0);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j)
            if (transition(i, j) > 0.0) a[i] |= std::uint64_t{1} << j;
    // Wielandt: a primitive matrix has A^k > 0 for every k >= (s-1)^2 + 1.
    const std::size_t wielandt = (s - 1) * (s - 1) + 1;
    const std::uint64_t full = s == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << s) - 1;
    for (std::size_t k = 1; k < wielandt; k *= 2) a = bool_square(a);
    return std::all_of(a.begin(), a.end(), [&](std::uint64_t r) { return r == full; });
}

std::vector<double> stationary_distribution(const Matrix& transition) {
    validate_stochastic(transition);
    const std::size_t s = transition.rows();
    if (s > ProcessModel::max_chain_states) throw DomainError("at most 64 states are supported");
    if (!is_primitive(transition)) throw NoStationaryLawError();

    // Solve pi (P - I) = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::MatrixXd a(s, s);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j) a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = transition(i, j) - (i == j ? 1.0 : 0.0);
    a.row(static_cast<Eigen::Index>(s - 1)).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s));
    rhs(static_cast<Eigen::Index>(s - 1)) = 1.0;
    Eigen::VectorXd x = a.fullPivLu().solve(rhs);

    std::vector<double> pi(s);
    for (std::size_t i = 0; i < s; ++i) pi[i] = std::max(0.0, x(static_cast<Eigen::Index>(i)));
    // Two power-iteration sweeps clean up residual rounding from the solve.
    for (int sweep = 0; sweep < 2; ++sweep) {
        pi = left_multiply(pi, transition);
        const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
        for (double& v : pi) v /= total;
    }
    return pi;
}

// ---------------------------------------------------------------------------
// ProcessModel

namespace {

std::size_t check_values(const std::vector<std::vector<double>>& values, std::size_t states) {
    if (values.size() != states) throw DomainError("value table must have one row per state");
    const std::size_t dim = values.front().size();
    if (dim == 0) throw DomainError("state values must have positive dimension");
    for (const auto& v : values)
        if (v.size() != dim) throw DomainError("ragged value table");
    return dim;
}

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
    std::vector<double> out;
    for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
    return out;
}

std::vector<double> cumulative(std::span<const double> p) {
    std::vector<double> cdf(p.size());
    std::partial_sum(p.begin(), p.end(), cdf.begin());
    // The last positive-mass state absorbs rounding so every u in [0,1) maps somewhere valid.
    for (std::size_t i = cdf.size(); i-- > 0;) {
        if (p[i] > 0.0) {
            for (std::size_t j = i; j < cdf.size(); ++j) cdf[j] = 2.0;
            break;
        }
    }
    return cdf;
}

std::uint32_t invert_cdf(std::span<const double> cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<std::uint32_t>(it - cdf.begin());
}

}  // namespace

ProcessModel ProcessModel::finite_markov(Matrix transition, std::vector<std::vector<double>> values) {
    ProcessModel m;
    m.kind_ = ModelKind::finite_markov;
    m.stationary_ = stationary_distribution(transition);
    m.states_ = transition.rows();
    m.dimension_ = check_values(values, m.states_);
    m.values_ = flatten(values);
    m.transition_ = std::move(transition);
    m.build_cdfs();
    return m;
}

ProcessModel ProcessModel::iid(std::vector<double> law, std::vector<std::vector<double>> values) {
    if (law.empty() || law.size() > max_chain_states) throw DomainError("iid law must have between 1 and 64 atoms");
    double total = 0.0;
    for (double p : law) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("iid law has a negative or non-finite weight");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("iid law does not sum to 1");
    ProcessModel m;
    m.kind_ = ModelKind::iid;
    m.states_ = law.size();
    m.dimension_ = check_values(values, m.states_);
    m.values_ = flatten(values);
    m.transition_ = Matrix(m.states_, m.states_);
    for (std::size_t i = 0; i < m.states_; ++i)
        for (std::size_t j = 0; j < m.states_; ++j) m.transition_(i, j) = law[j];
    m.stationary_ = std::move(law);
    m.build_cdfs();
    return m;
}

ProcessModel ProcessModel::doubling_map(DyadicObservable observable) {
    if (observable.level < 1 || observable.level > max_dyadic_level) throw DomainError("dyadic level must lie in [1, 30]");
    if (observable.dimension == 0 || !observable.function) throw DomainError("doubling-map observable is incomplete");
    if (!(observable.holder_exponent > 0.0 && observable.holder_exponent <= 1.0))
        throw DomainError("Hoelder exponent must lie in (0, 1]");
    ProcessModel m;
    m.kind_ = ModelKind::doubling_map;
    m.dimension_ = observable.dimension;
    m.states_ = std::size_t{1} << observable.level;
    // Cell values are cached up to level 22 (32 MiB at dimension 1); deeper levels evaluate on demand.
    if (observable.level <= 22) {
        m.values_.resize(m.states_ * m.dimension_);
        const double width = std::ldexp(1.0, -static_cast<int>(observable.level));
        for (std::size_t c = 0; c < m.states_; ++c)
            observable.function((static_cast<double>(c) + 0.5) * width,
                                std::span<double>(m.values_.data() + c * m.dimension_, m.dimension_));
    }
    m.dyadic_ = std::move(observable);
    return m;
}

void ProcessModel::build_cdfs() {
    initial_cdf_ = cumulative(stationary_);
    row_cdf_.clear();
    for (std::size_t i = 0; i < states_; ++i) {
        const auto c = cumulative(transition_.row(i));
        row_cdf_.insert(row_cdf_.end(), c.begin(), c.end());
    }
}

const Matrix& ProcessModel::transition() const {
    if (!has_transition()) throw DomainError("doubling-map model has no transition matrix; use block_chain()");
    return transition_;
}

std::span<const double> ProcessModel::stationary() const {
    if (!has_transition()) throw DomainError("doubling-map model: the stationary law is Lebesgue measure");
    return stationary_;
}

std::span<const double> ProcessModel::state_value(std::size_t state) const {
    if (state >= states_) throw DomainError("state out of range");
    if (values_.empty()) throw DomainError("cell values are not cached at this dyadic level");
    return {values_.data() + state * dimension_, dimension_};
}

const DyadicObservable& ProcessModel::dyadic() const {
    if (!dyadic_) throw DomainError("not a doubling-map model");
    return *dyadic_;
}

ProcessModel ProcessModel::block_chain() const {
    if (kind_ != ModelKind::doubling_map) throw DomainError("block_chain requires a doubling-map model");
    if (dyadic_->level > 6) throw BudgetError("block chain limited to dyadic level 6 (64 states)");
    const std::size_t cells = states_;
    Matrix p(cells, cells);
    for (std::size_t c = 0; c < cells; ++c) {
        const std::size_t shifted = (c << 1) & (cells - 1);
        p(c, shifted) += 0.5;
        p(c, shifted | 1) += 0.5;
    }
    std::vector<std::vector<double>> values(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        const auto v = state_value(c);
        values[c].assign(v.begin(), v.end());
    }
    return finite_markov(std::move(p), std::move(values));
}

std::uint32_t ProcessModel::draw_initial(double u) const { return invert_cdf(initial_cdf_, u); }

std::uint32_t ProcessModel::draw_next(std::uint32_t from, double u) const {
    return invert_cdf(std::span<const double>(row_cdf_.data() + std::size_t{from} * states_, states_), u);
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

// Level-L cell of T^k x where x has binary digits b_0 b_1 ... read from the reservoir.
std::uint32_t dyadic_cell(std::uint64_t key, std::uint64_t k, unsigned level) {
    std::uint32_t cell = 0;
    std::uint64_t word_index = ~std::uint64_t{0};
    std::uint64_t word = 0;
    for (unsigned j = 0; j < level; ++j) {
        const std::uint64_t bit = k + j;
        if ((bit >> 6) != word_index) {
            word_index = bit >> 6;
            word = counter_draw(key, word_index);
        }
        cell = (cell << 1) | static_cast<std::uint32_t>((word >> (bit & 63)) & 1U);
    }
    return cell;
}

}  // namespace

void sample_states(const ProcessModel& model, std::span<const std::uint64_t> indices, std::uint64_t key,
                   std::span<std::uint32_t> out) {
    if (out.size() != indices.size()) throw DomainError("output span size mismatch");
    switch (model.kind()) {
        case ModelKind::iid:
            for (std::size_t t = 0; t < indices.size(); ++t) out[t] = model.draw_initial(to_unit(counter_draw(key, indices[t])));
            return;
        case ModelKind::doubling_map:
            for (std::size_t t = 0; t < indices.size(); ++t) out[t] = dyadic_cell(key, indices[t], model.dyadic().level);
            return;
        case ModelKind::finite_markov: {
            if (indices.empty()) return;
            std::uint32_t state = model.draw_initial(to_unit(counter_draw(key, 0)));
            std::uint64_t position = 0;
            for (std::size_t t = 0; t < indices.size(); ++t) {
                while (position < indices[t]) {
                    ++position;
                    state = model.draw_next(state, to_unit(counter_draw(key, position)));
                }
                out[t] = state;
            }
            return;
        }
    }
}

std::vector<std::uint32_t> sample_path(const ProcessModel& model, std::size_t length, std::uint64_t key) {
    if (!model.has_transition()) throw DomainError("sample_path requires a chain model");
    std::vector<std::uint32_t> path(length);
    if (length == 0) return path;
    if (model.kind() == ModelKind::iid) {
        for (std::size_t k = 0; k < length; ++k) path[k] = model.draw_initial(to_unit(counter_draw(key, k)));
        return path;
    }
    path[0] = model.draw_initial(to_unit(counter_draw(key, 0)));
    for (std::size_t k = 1; k < length; ++k) path[k] = model.draw_next(path[k - 1], to_unit(counter_draw(key, k)));
    return path;
}

IndexedSample sample_at_indices(const ProcessModel& model, std::span<const std::uint64_t> indices,
                                std::uint64_t seed, SamplingBudget budget) {
    if (indices.empty()) throw DomainError("sample_at_indices needs at least one index");
    IndexedSample sample;
    sample.indices.assign(indices.begin(), indices.end());
    std::sort(sample.indices.begin(), sample.indices.end());
    sample.indices.erase(std::unique(sample.indices.begin(), sample.indices.end()), sample.indices.end());
    if (sample.indices.back() > budget.max_index)
        throw BudgetError("index " + std::to_string(sample.indices.back()) + " exceeds the sampling budget " +
                          std::to_string(budget.max_index));
    sample.states.resize(sample.indices.size());
    sample_states(model, sample.indices, seed, sample.states);
    sample.dimension = model.dimension();
    sample.values.resize(sample.indices.size() * sample.dimension);
    const bool cached = model.kind() != ModelKind::doubling_map || model.dyadic().level <= 22;
    for (std::size_t t = 0; t < sample.indices.size(); ++t) {
        std::span<double> out(sample.values.data() + t * sample.dimension, sample.dimension);
        if (cached) {
            const auto v = model.state_value(sample.states[t]);
            std::copy(v.begin(), v.end(), out.begin());
        } else {
            const auto& obs = model.dyadic();
            obs.function((sample.states[t] + 0.5) * std::ldexp(1.0, -static_cast<int>(obs.level)), out);
        }
    }
    return sample;
}

std::span<const double> IndexedSample::at(std::uint64_t index) const {
    const auto it = std::lower_bound(indices.begin(), indices.end(), index);
    if (it == indices.end() || *it != index) throw DomainError("index " + std::to_string(index) + " was not sampled");
    const auto t = static_cast<std::size_t>(it - indices.begin());
    return {values.data() + t * dimension, dimension};
}

// ---------------------------------------------------------------------------
// Mixing coefficients

namespace {

const Matrix& chain_transition(const ProcessModel& model) {
    if (!model.has_transition()) throw DomainError("operation requires a finite-markov or iid model");
    return model.transition();
}

double phi_from_power(const Matrix& pn, std::span<const double> pi) {
    double worst = 0.0;
    for (std::size_t i = 0; i < pn.rows(); ++i) worst = std::max(worst, total_variation(pn.row(i), pi));
    return worst;
}

// max over unions A of states of 1/2 sum_j |sum_{i in A} pi_i (P^n_ij - pi_j)|.
double alpha_from_power(const Matrix& pn, std::span<const double> pi) {
    const std::size_t s = pi.size();
    if (s > 16) throw BudgetError("alpha coefficient enumerates 2^S state unions; S <= 16 required");
    std::vector<double> diff(s * s);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j) diff[i * s + j] = pi[i] * (pn(i, j) - pi[j]);
    double best = 0.0;
    std::vector<double> acc(s);
    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << s); ++mask) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < s; ++i)
            if (mask >> i & 1U)
                for (std::size_t j = 0; j < s; ++j) acc[j] += diff[i * s + j];
        double total = 0.0;
        for (double v : acc) total += std::abs(v);
        best = std::max(best, 0.5 * total);
    }
    return best;
}

std::size_t checked_pow(std::size_t base, std::size_t exponent, std::size_t budget, const char* what) {
    std::size_t v = 1;
    for (std::size_t e = 0; e < exponent; ++e) {
        if (v > budget / std::max<std::size_t>(base, 1)) throw BudgetError(std::string(what) + " exceeds the enumeration budget");
        v *= base;
    }
    return v;
}

// Probability of a cylinder (s_0..s_{w-1}) at consecutive times under stationarity.
double cylinder_probability(const Matrix& p, std::span<const double> pi, std::span<const std::uint32_t> s) {
    double w = pi[s[0]];
    for (std::size_t t = 1; t < s.size(); ++t) w *= p(s[t - 1], s[t]);
    return w;
}

void decode(std::size_t code, std::size_t base, std::span<std::uint32_t> out) {
    for (std::size_t t = out.size(); t-- > 0;) {
        out[t] = static_cast<std::uint32_t>(code % base);
        code /= base;
    }
}

// Path probabilities for the past cylinder (ending at k) and joint with each future cylinder (starting at k+n).
struct CylinderTables {
    std::vector<double> past;   // P(a)
    std::vector<double> future; // P(b)
    std::vector<double> joint;  // P(a and b), past-major
    std::size_t past_count = 0;
    std::size_t future_count = 0;
};

CylinderTables cylinder_tables(const ProcessModel& model, std::size_t n, std::size_t pw, std::size_t fw) {
    if (pw == 0 || fw == 0 || pw > 3 || fw > 3) throw DomainError("cylinder windows must lie in [1, 3]");
    if (n == 0) throw DomainError("gap must be positive");
    const Matrix& p = chain_transition(model);
    const auto pi = model.stationary();
    const std::size_t s = model.state_count();
    CylinderTables t;
    t.past_count = checked_pow(s, pw, 1'000'000, "past cylinder enumeration");
    t.future_count = checked_pow(s, fw, 1'000'000, "future cylinder enumeration");
    checked_pow(s, pw + fw, 1'000'000, "cylinder enumeration");
    const Matrix pn = power(p, n);
    std::vector<std::uint32_t> a(pw), b(fw);
    t.past.resize(t.past_count);
    t.future.resize(t.future_count);
    t.joint.resize(t.past_count * t.future_count);
    std::vector<double> future_tail(t.future_count);  // P(b | xi at start = b_0)
    for (std::size_t fb = 0; fb < t.future_count; ++fb) {
        decode(fb, s, b);
        t.future[fb] = cylinder_probability(p, pi, b);
        double tail = 1.0;
        for (std::size_t u = 1; u < fw; ++u) tail *= p(b[u - 1], b[u]);
        future_tail[fb] = tail;
    }
    for (std::size_t pa = 0; pa < t.past_count; ++pa) {
        decode(pa, s, a);
        t.past[pa] = cylinder_probability(p, pi, a);
        for (std::size_t fb = 0; fb < t.future_count; ++fb) {
            decode(fb, s, b);
            t.joint[pa * t.future_count + fb] = t.past[pa] * pn(a.back(), b[0]) * future_tail[fb];
        }
    }
    return t;
}

}  // namespace

double phi_coefficient(const ProcessModel& model, std::size_t n) {
    if (n == 0) return 1.0;
    if (model.kind() == ModelKind::doubling_map) return 0.0;
    return phi_from_power(power(chain_transition(model), n), model.stationary());
}

double phi_bruteforce(const ProcessModel& model, std::size_t n, std::size_t past_window, std::size_t future_window) {
    const auto t = cylinder_tables(model, n, past_window, future_window);
    // For fixed A the supremum over unions B of future cylinders is the positive (or negative) part
    // of the signed measure B -> P(B|A) - P(B). Over unions A the ratio is a weighted average of
    // single-cylinder ratios, so single cylinders attain the supremum.
    double best = 0.0;
    for (std::size_t pa = 0; pa < t.past_count; ++pa) {
        if (t.past[pa] <= 0.0) continue;
        double pos = 0.0, neg = 0.0;
        for (std::size_t fb = 0; fb < t.future_count; ++fb) {
            const double d = t.joint[pa * t.future_count + fb] / t.past[pa] - t.future[fb];
            (d > 0 ? pos : neg) += d;
        }
        best = std::max({best, pos, -neg});
    }
    return best;
}

double alpha_coefficient(const ProcessModel& model, std::size_t n) {
    if (model.kind() == ModelKind::doubling_map) return n == 0 ? 0.25 : 0.0;
    const Matrix& p = chain_transition(model);
    return alpha_from_power(power(p, n), model.stationary());
}

double alpha_bruteforce(const ProcessModel& model, std::size_t n, std::size_t past_window, std::size_t future_window) {
    const auto t = cylinder_tables(model, n, past_window, future_window);
    if (t.past_count > 16) throw BudgetError("alpha brute force enumerates 2^(S^past_window) unions; at most 16 past cylinders");
    double best = 0.0;
    std::vector<double> joint(t.future_count);
    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << t.past_count); ++mask) {
        double pa_total = 0.0;
        std::fill(joint.begin(), joint.end(), 0.0);
        for (std::size_t pa = 0; pa < t.past_count; ++pa) {
            if (!(mask >> pa & 1U)) continue;
            pa_total += t.past[pa];
            for (std::size_t fb = 0; fb < t.future_count; ++fb) joint[fb] += t.joint[pa * t.future_count + fb];
        }
        double pos = 0.0, neg = 0.0;
        for (std::size_t fb = 0; fb < t.future_count; ++fb) {
            const double d = joint[fb] - pa_total * t.future[fb];
            (d > 0 ? pos : neg) += d;
        }
        best = std::max({best, pos, -neg});
    }
    return best;
}

double beta_approx(const ProcessModel& model, double q, std::size_t r) {
    if (!(q > 0.0)) throw DomainError("beta_q requires q in (0, inf]");
    if (model.kind() != ModelKind::doubling_map) return 0.0;
    const auto& obs = model.dyadic();
    // Realized values are constant on level-L cells, so the window sigma-algebra of radius L determines them.
    if (r >= obs.level) return 0.0;
    return obs.holder_constant * std::exp2(-obs.holder_exponent * static_cast<double>(r));
}

// ---------------------------------------------------------------------------
// MixingProfile

MixingProfile MixingProfile::of(const ProcessModel& model) {
    MixingProfile m;
    switch (model.kind()) {
        case ModelKind::iid:
            m.source_ = Source::independent;
            m.phi_ = {1.0};
            m.decay_ = DecayParameters{1.0, 1.0, 1.0};
            m.doeblin_ = true;
            return m;
        case ModelKind::doubling_map: {
            const auto& obs = model.dyadic();
            m.source_ = Source::doubling;
            m.phi_ = {1.0};
            m.holder_constant_ = obs.holder_constant;
            m.holder_exponent_ = obs.holder_exponent;
            m.dyadic_level_ = obs.level;
            m.decay_ = DecayParameters{1.0, 1.0, 1.0};
            m.doeblin_ = true;
            return m;
        }
        case ModelKind::finite_markov: break;
    }
    m.source_ = Source::chain;
    const Matrix& p = model.transition();
    m.transition_ = p;
    m.stationary_.assign(model.stationary().begin(), model.stationary().end());
    constexpr std::size_t table = 512;
    m.phi_.assign(1, 1.0);
    Matrix pn = p;
    std::optional<std::size_t> contraction_time;
    double theta = 1.0;
    for (std::size_t n = 1; n < table; ++n) {
        m.phi_.push_back(phi_from_power(pn, m.stationary_));
        if (!contraction_time) {
            double dbar = 0.0;
            for (std::size_t i = 0; i < pn.rows(); ++i)
                for (std::size_t j = i + 1; j < pn.rows(); ++j) dbar = std::max(dbar, total_variation(pn.row(i), pn.row(j)));
            if (dbar <= 0.5) {
                contraction_time = n;
                theta = dbar;
            }
        }
        pn = pn * p;
    }
    // Monotone envelope against rounding: phi is nonincreasing for chains.
    for (std::size_t n = 1; n < m.phi_.size(); ++n) m.phi_[n] = std::min(m.phi_[n], m.phi_[n - 1]);
    if (contraction_time) {
        // phi(n) <= dbar(n) <= theta^floor(n/T) <= theta^(n/T - 1).
        m.doeblin_ = true;
        const auto t = static_cast<double>(*contraction_time);
        if (theta > 0.0) {
            m.decay_ = DecayParameters{-std::log(theta) / t, 1.0 / theta, 1.0};
        } else {
            double d = 1.0;
            for (std::size_t n = 0; n < *contraction_time; ++n) d = std::max(d, m.phi_[n] * std::exp(static_cast<double>(n)));
            m.decay_ = DecayParameters{1.0, d, 1.0};
        }
    }
    return m;
}

MixingProfile MixingProfile::from_table(std::vector<double> phi, std::optional<DecayParameters> decay) {
    MixingProfile m;
    m.source_ = Source::table;
    if (phi.empty()) phi.push_back(1.0);
    phi[0] = 1.0;
    for (double v : phi)
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("phi values must lie in [0, 1]");
    m.phi_ = std::move(phi);
    m.decay_ = decay;
    return m;
}

double MixingProfile::phi(std::size_t n) const {
    if (n == 0) return 1.0;
    switch (source_) {
        case Source::independent:
        case Source::doubling: return 0.0;
        case Source::table:
            if (n < phi_.size()) return phi_[n];
            if (decay_) return std::min(1.0, decay_->d * std::exp(-decay_->a * std::pow(static_cast<double>(n), decay_->eta)));
            return 0.0;
        case Source::chain:
            if (n < phi_.size()) return phi_[n];
            return std::min(phi_.back(), phi_from_power(power(*transition_, n), stationary_));
    }
    return 1.0;
}

bool MixingProfile::vanishes_past_table() const noexcept {
    switch (source_) {
        case Source::independent:
        case Source::doubling: return true;
        case Source::table: return !decay_ || phi_.back() == 0.0;
        case Source::chain: return phi_.back() == 0.0;
    }
    return false;
}

double MixingProfile::alpha(std::size_t n) const {
    switch (source_) {
        case Source::independent: return n == 0 ? 0.25 : 0.0;
        case Source::doubling: return n == 0 ? 0.25 : 0.0;
        case Source::table: return 0.5 * phi(n);  // only the generic bound is known
        case Source::chain: return alpha_from_power(power(*transition_, n), stationary_);
    }
    return 0.25;
}

double MixingProfile::beta(double q, std::size_t r) const {
    if (!(q > 0.0)) throw DomainError("beta_q requires q in (0, inf]");
    if (source_ != Source::doubling || r >= dyadic_level_) return 0.0;
    return holder_constant_ * std::exp2(-holder_exponent_ * static_cast<double>(r));
}

double MixingProfile::phi_plus_beta(std::size_t n, double kappa) const {
    return phi(n) + std::pow(beta(kappa, n), kappa);
}

// ---------------------------------------------------------------------------
// Exact conditional laws

namespace {

class GapPowers {
public:
    explicit GapPowers(const Matrix& p) : p_(p) {}
    const Matrix& operator()(std::uint64_t gap) {
        auto it = cache_.find(gap);
        if (it == cache_.end()) it = cache_.emplace(gap, power(p_, static_cast<std::size_t>(gap))).first;
        return it->second;
    }

private:
    const Matrix& p_;
    std::map<std::uint64_t, Matrix> cache_;
};

// Stationary probability of the chain visiting states[t] at sorted, distinct indices[t].
double chain_weight(GapPowers& gaps, std::span<const double> pi, std::span<const std::uint64_t> indices,
                    std::span<const std::uint32_t> states) {
    double w = pi[states[0]];
    for (std::size_t t = 1; t < indices.size() && w > 0.0; ++t) w *= gaps(indices[t] - indices[t - 1])(states[t - 1], states[t]);
    return w;
}

}  // namespace

double JointLaw::probability(std::span<const std::uint32_t> states) const {
    if (states.size() != targets.size()) throw DomainError("state tuple length mismatch");
    std::size_t code = 0;
    for (auto s : states) {
        if (s >= state_count) throw DomainError("state out of range");
        code = code * state_count + s;
    }
    return table[code];
}

JointLaw conditional_law(const ProcessModel& model, std::span<const std::pair<std::uint64_t, std::uint32_t>> known,
                         std::span<const std::uint64_t> targets, std::size_t table_budget) {
    const Matrix& p = chain_transition(model);
    const auto pi = model.stationary();
    const std::size_t s = model.state_count();
    if (!std::is_sorted(targets.begin(), targets.end()) ||
        std::adjacent_find(targets.begin(), targets.end()) != targets.end())
        throw DomainError("targets must be sorted and distinct");
    const std::size_t cells = checked_pow(s, targets.size(), table_budget, "conditional law table");

    // Known states, deduplicated; conflicting duplicates have probability zero.
    std::map<std::uint64_t, std::uint32_t> fixed;
    for (const auto& [index, state] : known) {
        if (state >= s) throw DomainError("known state out of range");
        const auto [it, inserted] = fixed.emplace(index, state);
        if (!inserted && it->second != state) throw ZeroProbabilityError("known states conflict at index " + std::to_string(index));
    }

    // Merged timeline: slot >= 0 refers to a target position, -1 to a known state.
    std::vector<std::uint64_t> timeline;
    std::vector<long> slot;
    std::vector<std::uint32_t> known_state;
    {
        auto kt = fixed.begin();
        std::size_t tt = 0;
        while (kt != fixed.end() || tt < targets.size()) {
            if (tt < targets.size() && (kt == fixed.end() || targets[tt] <= kt->first)) {
                timeline.push_back(targets[tt]);
                slot.push_back(static_cast<long>(tt));
                known_state.push_back(0);
                if (kt != fixed.end() && kt->first == targets[tt]) {
                    // Target coincides with a known index: keep both, joined by a zero gap.
                    timeline.push_back(kt->first);
                    slot.push_back(-1);
                    known_state.push_back(kt->second);
                    ++kt;
                }
                ++tt;
            } else {
                timeline.push_back(kt->first);
                slot.push_back(-1);
                known_state.push_back(kt->second);
                ++kt;
            }
        }
    }

    GapPowers gaps(p);
    JointLaw law;
    law.targets.assign(targets.begin(), targets.end());
    law.state_count = s;
    law.table.assign(cells, 0.0);
    std::vector<std::uint32_t> tuple(targets.size());
    std::vector<std::uint32_t> states(timeline.size());
    double total = 0.0;
    for (std::size_t code = 0; code < cells; ++code) {
        decode(code, s, tuple);
        for (std::size_t t = 0; t < timeline.size(); ++t) states[t] = slot[t] >= 0 ? tuple[static_cast<std::size_t>(slot[t])] : known_state[t];
        double w = pi[states[0]];
        for (std::size_t t = 1; t < timeline.size() && w > 0.0; ++t) {
            const std::uint64_t gap = timeline[t] - timeline[t - 1];
            w *= gap == 0 ? (states[t] == states[t - 1] ? 1.0 : 0.0) : gaps(gap)(states[t - 1], states[t]);
        }
        law.table[code] = w;
        total += w;
    }
    if (!(total > 0.0)) throw ZeroProbabilityError("conditioning event has probability zero");
    for (double& v : law.table) v /= total;
    return law;
}

// ---------------------------------------------------------------------------
// Decoupling and fiber checks

DecouplingReport decoupling_check(const ProcessModel& model, std::span<const IndexWindow> blocks,
                                  const std::vector<std::vector<std::size_t>>& groups, const BlockFunction& h,
                                  double sup_h, double tol, std::size_t table_budget) {
    const Matrix& p = chain_transition(model);
    const auto pi = model.stationary();
    const std::size_t s = model.state_count();
    if (blocks.empty()) throw DomainError("decoupling_check needs at least one block");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].last < blocks[b].first) throw DomainError("block window is reversed");
        if (b > 0 && blocks[b].first <= blocks[b - 1].last) throw DomainError("blocks overlap or are out of order");
    }
    std::vector<int> owner(blocks.size(), -1);
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t b : groups[g]) {
            if (b >= blocks.size() || owner[b] != -1) throw DomainError("grouping must partition the blocks");
            owner[b] = static_cast<int>(g);
        }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end()) throw DomainError("grouping must partition the blocks");

    std::vector<std::uint64_t> indices;
    std::vector<int> index_group;
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (std::uint64_t k = blocks[b].first; k <= blocks[b].last; ++k) {
            indices.push_back(k);
            index_group.push_back(owner[b]);
        }
    const std::size_t total = checked_pow(s, indices.size(), table_budget, "decoupling enumeration");

    std::vector<std::vector<std::size_t>> group_positions(groups.size());
    for (std::size_t t = 0; t < indices.size(); ++t) group_positions[static_cast<std::size_t>(index_group[t])].push_back(t);

    GapPowers gaps(p);
    std::vector<std::uint32_t> states(indices.size());
    std::vector<std::uint64_t> sub_idx;
    std::vector<std::uint32_t> sub_states;
    double joint_mean = 0.0, product_mean = 0.0;
    for (std::size_t code = 0; code < total; ++code) {
        decode(code, s, states);
        const double value = h(states);
        const double joint = chain_weight(gaps, pi, indices, states);
        double product = 1.0;
        for (const auto& pos : group_positions) {
            if (pos.empty()) continue;
            sub_idx.clear();
            sub_states.clear();
            for (std::size_t t : pos) {
                sub_idx.push_back(indices[t]);
                sub_states.push_back(states[t]);
            }
            product *= chain_weight(gaps, pi, sub_idx, sub_states);
            if (product == 0.0) break;
        }
        joint_mean += joint * value;
        product_mean += product * value;
    }

    DecouplingReport report;
    report.difference = std::abs(joint_mean - product_mean);
    double phi_sum = 0.0;
    for (std::size_t b = 1; b < blocks.size(); ++b) phi_sum += phi_coefficient(model, blocks[b].first - blocks[b - 1].last);
    report.bound = 4.0 * sup_h * phi_sum;
    report.pass = report.difference <= report.bound + tol;
    return report;
}

FiberReport fiber_conditional_check(const ProcessModel& model, std::size_t gap, const FiberFunction& f, double tol,
                                    std::size_t table_budget) {
    const Matrix& p = chain_transition(model);
    const auto pi = model.stationary();
    const std::size_t s = model.state_count();
    if (gap == 0) throw DomainError("gap must be positive");
    if (f.grid.empty() || f.future_window == 0) throw DomainError("fiber function needs a grid and a future window");
    const std::size_t columns = checked_pow(s, f.future_window, table_budget, "fiber enumeration");
    checked_pow(s, f.future_window + 1, table_budget, "fiber enumeration");
    if (f.values.size() != f.grid.size() * columns) throw DomainError("fiber table has the wrong size");

    FiberReport report;
    for (double v : f.values) report.constant = std::max(report.constant, std::abs(v));
    for (std::size_t x = 0; x < f.grid.size(); ++x)
        for (std::size_t y = x + 1; y < f.grid.size(); ++y) {
            const double dist = std::pow(std::abs(f.grid[x] - f.grid[y]), f.holder_exponent);
            if (dist <= 0.0) continue;
            for (std::size_t c = 0; c < columns; ++c)
                report.constant = std::max(report.constant, std::abs(f.values[x * columns + c] - f.values[y * columns + c]) / dist);
        }

    const Matrix pg = power(p, gap);
    std::vector<std::uint32_t> b(f.future_window);
    std::vector<double> tail(columns), start(columns);
    std::vector<std::uint32_t> first(columns);
    for (std::size_t c = 0; c < columns; ++c) {
        decode(c, s, b);
        double w = 1.0;
        for (std::size_t u = 1; u < b.size(); ++u) w *= p(b[u - 1], b[u]);
        tail[c] = w;
        first[c] = b[0];
    }
    for (std::size_t x = 0; x < f.grid.size(); ++x) {
        double mean = 0.0;
        for (std::size_t c = 0; c < columns; ++c) mean += pi[first[c]] * tail[c] * f.values[x * columns + c];
        // The past sigma-algebra acts through the present state by the Markov property.
        for (std::size_t i = 0; i < s; ++i) {
            if (pi[i] <= 0.0) continue;
            double cond = 0.0;
            for (std::size_t c = 0; c < columns; ++c) cond += pg(i, first[c]) * tail[c] * f.values[x * columns + c];
            report.deviation = std::max(report.deviation, std::abs(cond - mean));
        }
    }
    report.bound = 2.0 * report.constant * phi_coefficient(model, gap);
    report.pass = report.deviation <= report.bound + tol;
    return report;
}

}  // namespace nonconv
