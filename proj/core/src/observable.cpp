#include "nonconv/observable.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nonconv/errors.hpp"
#include "nonconv/rng.hpp"
#include "nonconv/statistics.hpp"

namespace nonconv {

Observable::Observable(std::string name, std::size_t ell, std::size_t dimension, Evaluator f, Regularity regularity,
                       bool product_form)
    : name_(std::move(name)), ell_(ell), dimension_(dimension), f_(std::move(f)), regularity_(regularity),
      product_form_(product_form) {
    if (ell_ == 0 || dimension_ == 0) throw DomainError("observable arity and dimension must be positive");
    if (!f_) throw DomainError("observable needs an evaluator");
    if (!(regularity_.K >= 1.0)) throw DomainError("regularity constant K must be at least 1");
    if (!(regularity_.kappa > 0.0 && regularity_.kappa <= 1.0)) throw DomainError("kappa must lie in (0, 1]");
}

Observable Observable::product(std::size_t ell, double bound) {
    const double b = std::abs(bound);
    const double k = std::max({1.0, std::pow(b, static_cast<double>(ell)), static_cast<double>(ell) * std::pow(b, static_cast<double>(ell) - 1)});
    return Observable(
        "product", ell, 1,
        [ell](std::span<const double> x) {
            double v = 1.0;
            for (std::size_t i = 0; i < ell; ++i) v *= x[i];
            return v;
        },
        Regularity{k, 1.0, 0}, true);
}

Observable Observable::sum(std::size_t ell, double bound) {
    return Observable(
        "sum", ell, 1,
        [ell](std::span<const double> x) {
            double v = 0.0;
            for (std::size_t i = 0; i < ell; ++i) v += x[i];
            return v;
        },
        Regularity{std::max(1.0, std::abs(bound)), 1.0, 0});
}

Observable Observable::indicator_product(std::size_t ell, double threshold) {
    // K = 1 is valid on supports whose atoms on opposite sides of the threshold are at distance >= 1.
    return Observable(
        "indicator-product", ell, 1,
        [ell, threshold](std::span<const double> x) {
            for (std::size_t i = 0; i < ell; ++i)
                if (!(x[i] >= threshold)) return 0.0;
            return 1.0;
        },
        Regularity{1.0, 1.0, 0}, true);
}

Observable Observable::clipped_polynomial(std::size_t ell, std::vector<double> coefficients, double clip) {
    if (coefficients.empty()) throw DomainError("clipped polynomial needs coefficients");
    if (!(clip > 0.0)) throw DomainError("clip level must be positive");
    double k = std::max(1.0, clip);
    double slope = 0.0;
    for (std::size_t d = 1; d < coefficients.size(); ++d)
        slope += static_cast<double>(d) * std::abs(coefficients[d]) * std::pow(static_cast<double>(ell), static_cast<double>(d) - 1);
    k = std::max(k, slope);
    const auto lambda = static_cast<unsigned>(coefficients.size() > 2 ? coefficients.size() - 2 : 0);
    return Observable(
        "clipped-polynomial", ell, 1,
        [ell, coefficients = std::move(coefficients), clip](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t i = 0; i < ell; ++i) s += x[i];
            double v = 0.0;
            for (std::size_t d = coefficients.size(); d-- > 0;) v = v * s + coefficients[d];
            return std::clamp(v, -clip, clip);
        },
        Regularity{k, 1.0, lambda});
}

RegularityScan scan_regularity(const Observable& f, const std::vector<std::vector<double>>& points) {
    const auto& reg = f.regularity();
    const std::size_t ell = f.ell(), dim = f.dimension();
    auto norm = [dim](std::span<const double> x, std::size_t i) {
        double s = 0.0;
        for (std::size_t c = 0; c < dim; ++c) s += x[i * dim + c] * x[i * dim + c];
        return std::sqrt(s);
    };
    auto lam_sum = [&](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < ell; ++i) s += std::pow(norm(x, i), reg.lambda);
        return s;
    };
    RegularityScan scan;
    scan.points = points.size();
    std::vector<double> values(points.size());
    for (std::size_t p = 0; p < points.size(); ++p) {
        if (points[p].size() != ell * dim) throw DomainError("scan point has the wrong length");
        values[p] = f(points[p]);
        scan.worst_growth_ratio = std::max(scan.worst_growth_ratio, std::abs(values[p]) / (reg.K * (1.0 + lam_sum(points[p]))));
    }
    for (std::size_t p = 0; p < points.size(); ++p)
        for (std::size_t q = p + 1; q < points.size(); ++q) {
            double dist = 0.0;
            for (std::size_t i = 0; i < ell; ++i) {
                double d = 0.0;
                for (std::size_t c = 0; c < dim; ++c) d += std::pow(points[p][i * dim + c] - points[q][i * dim + c], 2);
                dist += std::pow(std::sqrt(d), reg.kappa);
            }
            const double diff = std::abs(values[p] - values[q]);
            if (diff == 0.0) continue;
            const double bound = reg.K * (1.0 + lam_sum(points[p]) + lam_sum(points[q])) * dist;
            scan.worst_holder_ratio = std::max(scan.worst_holder_ratio, bound > 0.0 ? diff / bound : INFINITY);
        }
    scan.pass = scan.worst_growth_ratio <= 1.0 + 1e-12 && scan.worst_holder_ratio <= 1.0 + 1e-12;
    return scan;
}

// ---------------------------------------------------------------------------
// Marginal laws

MarginalLaw MarginalLaw::of(const ProcessModel& model) {
    MarginalLaw law;
    const std::size_t s = model.state_count();
    if (model.kind() == ModelKind::doubling_map) {
        if (model.dyadic().level > 22) throw BudgetError("marginal law of a doubling map is tabulated up to level 22");
        law.weights.assign(s, 1.0 / static_cast<double>(s));
    } else {
        law.weights.assign(model.stationary().begin(), model.stationary().end());
    }
    law.atoms.reserve(s);
    for (std::size_t i = 0; i < s; ++i) {
        const auto v = model.state_value(i);
        law.atoms.emplace_back(v.begin(), v.end());
    }
    return law;
}

double MarginalLaw::tau(double k) const {
    double m = 0.0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        double n2 = 0.0;
        for (double v : atoms[a]) n2 += v * v;
        if (weights[a] > 0.0) m += weights[a] * std::pow(std::sqrt(n2), k);
    }
    return std::pow(m, 1.0 / k);
}

bool MarginalLaw::moment_growth_holds(double M, double zeta, unsigned k_max) const {
    for (unsigned k = 1; k <= k_max; ++k) {
        const double lhs = static_cast<double>(k) * std::log(tau(k));
        const double rhs = static_cast<double>(k) * std::log(M) + zeta * std::lgamma(static_cast<double>(k) + 1.0);
        if (lhs > rhs + 1e-12 * std::max(1.0, std::abs(rhs))) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Centering and decomposition

namespace {

std::size_t tensor_size(std::size_t atoms, std::size_t ell, std::size_t budget) {
    std::size_t v = 1;
    for (std::size_t i = 0; i < ell; ++i) {
        if (atoms != 0 && v > budget / atoms) return 0;
        v *= atoms;
    }
    return v <= budget ? v : 0;
}

void validate_law(const MarginalLaw& mu, std::size_t dim) {
    if (mu.atoms.empty() || mu.atoms.size() != mu.weights.size()) throw DomainError("marginal law is empty or inconsistent");
    for (const auto& a : mu.atoms)
        if (a.size() != dim) throw DomainError("marginal atom dimension does not match the observable");
}

// Table of F over all atom tuples, first argument slowest.
std::vector<double> full_table(const Observable& f, const MarginalLaw& mu, std::size_t cells) {
    const std::size_t ell = f.ell(), dim = f.dimension(), a = mu.size();
    std::vector<double> table(cells);
    std::vector<double> x(ell * dim);
    std::vector<std::size_t> digits(ell, 0);
    for (std::size_t code = 0; code < cells; ++code) {
        for (std::size_t i = 0; i < ell; ++i) std::copy(mu.atoms[digits[i]].begin(), mu.atoms[digits[i]].end(), x.begin() + static_cast<std::ptrdiff_t>(i * dim));
        table[code] = f(x);
        for (std::size_t i = ell; i-- > 0;) {
            if (++digits[i] < a) break;
            digits[i] = 0;
        }
    }
    return table;
}

std::vector<std::vector<double>> draw_nodes(const Observable& f, const MarginalLaw& mu, const MonteCarloBudget& mc) {
    std::vector<double> cdf(mu.weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) cdf[i] = acc += mu.weights[i];
    const std::size_t ell = f.ell(), dim = f.dimension();
    std::vector<std::vector<double>> nodes(mc.nodes, std::vector<double>(ell * dim));
    for (std::size_t m = 0; m < mc.nodes; ++m) {
        CounterStream rng(stream_key(mc.seed, m));
        for (std::size_t i = 0; i < ell; ++i) {
            const double u = rng.uniform() * acc;
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            if (it == cdf.end()) --it;
            const auto& atom = mu.atoms[static_cast<std::size_t>(it - cdf.begin())];
            std::copy(atom.begin(), atom.end(), nodes[m].begin() + static_cast<std::ptrdiff_t>(i * dim));
        }
    }
    return nodes;
}

}  // namespace

CenteringResult centering_constant(const Observable& f, const MarginalLaw& mu, MonteCarloBudget mc,
                                   std::size_t tensor_budget) {
    validate_law(mu, f.dimension());
    const std::size_t cells = tensor_size(mu.size(), f.ell(), tensor_budget);
    CenteringResult result;
    if (cells != 0) {
        const auto table = full_table(f, mu, cells);
        // Contract one argument at a time from the last, as in the decomposition.
        std::vector<double> current = table;
        for (std::size_t level = f.ell(); level-- > 0;) {
            std::vector<double> next(current.size() / mu.size());
            for (std::size_t t = 0; t < next.size(); ++t) {
                CompensatedSum s;
                for (std::size_t a = 0; a < mu.size(); ++a) s.add(mu.weights[a] * current[t * mu.size() + a]);
                next[t] = s.value();
            }
            current.swap(next);
        }
        result.value = current[0];
        return result;
    }
    if (mc.nodes == 0) throw BudgetError("centering constant: tensor sum exceeds the budget and no Monte Carlo budget was given");
    const auto nodes = draw_nodes(f, mu, mc);
    RunningMoments m;
    for (const auto& x : nodes) m.add(f(x));
    result.value = m.mean();
    result.standard_error = std::sqrt(m.variance() / static_cast<double>(nodes.size()));
    result.exact = false;
    return result;
}

CenteredObservable decompose(const Observable& f, const MarginalLaw& mu, MonteCarloBudget mc, std::size_t tensor_budget) {
    validate_law(mu, f.dimension());
    CenteredObservable cf;
    cf.f_ = std::make_shared<const Observable>(f);
    cf.law_ = std::make_shared<const MarginalLaw>(mu);
    const std::size_t ell = f.ell();
    const std::size_t cells = tensor_size(mu.size(), ell, tensor_budget);
    if (cells != 0) {
        cf.exact_ = true;
        cf.tables_.resize(ell + 1);
        cf.tables_[ell] = full_table(f, mu, cells);
        for (std::size_t i = ell; i-- > 0;) {
            const auto& upper = cf.tables_[i + 1];
            auto& lower = cf.tables_[i];
            lower.resize(upper.size() / mu.size());
            for (std::size_t t = 0; t < lower.size(); ++t) {
                CompensatedSum s;
                for (std::size_t a = 0; a < mu.size(); ++a) s.add(mu.weights[a] * upper[t * mu.size() + a]);
                lower[t] = s.value();
            }
        }
        cf.fbar_ = cf.tables_[0][0];
        return cf;
    }
    if (mc.nodes == 0) throw BudgetError("decomposition: tensor sum exceeds the budget and no Monte Carlo budget was given");
    cf.exact_ = false;
    cf.nodes_ = draw_nodes(f, mu, mc);
    RunningMoments m;
    for (const auto& x : cf.nodes_) m.add(f(x));
    cf.fbar_ = m.mean();
    cf.fbar_se_ = std::sqrt(m.variance() / static_cast<double>(cf.nodes_.size()));
    return cf;
}

double CenteredObservable::integrated(std::size_t i, std::span<const double> x) const {
    const std::size_t ell = f_->ell(), dim = f_->dimension();
    if (i > ell) throw DomainError("component index out of range");
    if (x.size() < i * dim) throw DomainError("too few coordinates");
    if (i == 0) return fbar_;
    std::vector<double> point(ell * dim);
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(i * dim), point.begin());
    if (i == ell) return (*f_)(point);
    if (!exact_) {
        CompensatedSum s;
        for (const auto& node : nodes_) {
            std::copy(node.begin() + static_cast<std::ptrdiff_t>(i * dim), node.end(), point.begin() + static_cast<std::ptrdiff_t>(i * dim));
            s.add((*f_)(point));
        }
        return s.value() / static_cast<double>(nodes_.size());
    }
    // Exact: sum over the remaining ell - i arguments against mu^{ell - i}.
    const auto& mu = *law_;
    const std::size_t free = ell - i;
    std::vector<std::size_t> digits(free, 0);
    CompensatedSum s;
    while (true) {
        double w = 1.0;
        for (std::size_t t = 0; t < free; ++t) {
            w *= mu.weights[digits[t]];
            std::copy(mu.atoms[digits[t]].begin(), mu.atoms[digits[t]].end(), point.begin() + static_cast<std::ptrdiff_t>((i + t) * dim));
        }
        if (w > 0.0) s.add(w * (*f_)(point));
        std::size_t t = free;
        while (t-- > 0) {
            if (++digits[t] < mu.size()) break;
            digits[t] = 0;
        }
        if (t == static_cast<std::size_t>(-1)) break;
    }
    return s.value();
}

double CenteredObservable::component(std::size_t i, std::span<const double> x) const {
    if (i == 0 || i > ell()) throw DomainError("component index out of range");
    return integrated(i, x) - integrated(i - 1, x);
}

double CenteredObservable::integrated_at(std::size_t i, std::span<const std::uint32_t> atoms) const {
    if (!exact_) throw DomainError("atom tables exist only for exact decompositions");
    if (i > ell() || atoms.size() < i) throw DomainError("component index out of range");
    std::size_t code = 0;
    const std::size_t a = law_->size();
    for (std::size_t t = 0; t < i; ++t) code = code * a + atoms[t];
    return tables_[i][code];
}

double CenteredObservable::component_at(std::size_t i, std::span<const std::uint32_t> atoms) const {
    if (i == 0) throw DomainError("component index out of range");
    return integrated_at(i, atoms) - integrated_at(i - 1, atoms);
}

const std::vector<double>& CenteredObservable::table(std::size_t i) const {
    if (!exact_) throw DomainError("atom tables exist only for exact decompositions");
    return tables_.at(i);
}

// ---------------------------------------------------------------------------
// Sums

SumPlan::SumPlan(const IndexFamily& family, std::uint64_t N) : N_(N), ell_(family.ell()) {
    if (N == 0) throw DomainError("N must be positive");
    if (family.ray_start() > 1) throw DomainError("sums start at n = 1; the family's ray start must be 1");
    indices_ = family.index_set(1, N);
    if (indices_.size() > std::numeric_limits<std::uint32_t>::max()) throw BudgetError("index set too large");
    slots_.resize(static_cast<std::size_t>(N) * ell_);
    for (std::uint64_t n = 1; n <= N; ++n)
        for (std::size_t i = 1; i <= ell_; ++i) {
            const auto q = family.map(i, n);
            const auto it = std::lower_bound(indices_.begin(), indices_.end(), q);
            slots_[(n - 1) * ell_ + (i - 1)] = static_cast<std::uint32_t>(it - indices_.begin());
        }
}

double nonconv_sum_from_states(const CenteredObservable& cf, const SumPlan& plan, std::span<const std::uint32_t> states) {
    const auto& table = cf.table(cf.ell());
    const std::size_t a = cf.law().size();
    const std::size_t ell = plan.ell();
    CompensatedSum s;
    for (std::uint64_t n = 1; n <= plan.N(); ++n) {
        std::size_t code = 0;
        for (std::size_t i = 1; i <= ell; ++i) code = code * a + states[plan.slot(n, i)];
        s.add(table[code] - cf.fbar());
    }
    return s.value();
}

double nonconv_sum(const ProcessModel& model, const CenteredObservable& cf, const IndexFamily& family,
                   std::uint64_t N, std::uint64_t seed, SamplingBudget budget) {
    if (cf.ell() != family.ell()) throw DomainError("observable arity does not match the index family");
    const SumPlan plan(family, N);
    const auto sample = sample_at_indices(model, plan.indices(), seed, budget);
    if (cf.exact() && cf.law().size() == model.state_count()) return nonconv_sum_from_states(cf, plan, sample.states);
    const std::size_t dim = model.dimension(), ell = plan.ell();
    std::vector<double> x(ell * dim);
    CompensatedSum s;
    for (std::uint64_t n = 1; n <= N; ++n) {
        for (std::size_t i = 1; i <= ell; ++i) {
            const std::size_t slot = plan.slot(n, i);
            std::copy(sample.values.begin() + static_cast<std::ptrdiff_t>(slot * dim),
                      sample.values.begin() + static_cast<std::ptrdiff_t>((slot + 1) * dim),
                      x.begin() + static_cast<std::ptrdiff_t>((i - 1) * dim));
        }
        s.add(cf.observable()(x) - cf.fbar());
    }
    return s.value();
}

double exact_mean_SN(const ProcessModel& model, const CenteredObservable& cf, const IndexFamily& family, std::uint64_t N) {
    if (cf.ell() != family.ell()) throw DomainError("observable arity does not match the index family");
    if (model.kind() == ModelKind::iid) return 0.0;
    if (model.kind() == ModelKind::doubling_map) return exact_mean_SN(model.block_chain(), cf, family, N);
    if (!cf.exact() || cf.law().size() != model.state_count())
        throw DomainError("exact mean needs an exact decomposition over the model's states");
    const Matrix& p = model.transition();
    const auto pi = model.stationary();
    const std::size_t s = model.state_count(), ell = family.ell();
    if (tensor_size(s, ell, 1'000'000) == 0) throw BudgetError("exact mean: S^ell exceeds 10^6");
    const auto& table = cf.table(ell);
    std::map<std::uint64_t, Matrix> powers;
    auto gap_power = [&](std::uint64_t g) -> const Matrix& {
        auto it = powers.find(g);
        if (it == powers.end()) it = powers.emplace(g, power(p, static_cast<std::size_t>(g))).first;
        return it->second;
    };
    CompensatedSum total;
    // Forward pass over i: weight[tuple prefix] accumulates pi(x_1) prod P^{gap}(x_{i-1}, x_i).
    std::vector<double> weights, next;
    for (std::uint64_t n = 1; n <= N; ++n) {
        weights.assign(pi.begin(), pi.end());
        for (std::size_t i = 2; i <= ell; ++i) {
            const Matrix& pg = gap_power(family.map(i, n) - family.map(i - 1, n));
            next.assign(weights.size() * s, 0.0);
            for (std::size_t t = 0; t < weights.size(); ++t) {
                const std::size_t last = t % s;
                for (std::size_t x = 0; x < s; ++x) next[t * s + x] = weights[t] * pg(last, x);
            }
            weights.swap(next);
        }
        CompensatedSum term;
        for (std::size_t t = 0; t < weights.size(); ++t) term.add(weights[t] * table[t]);
        total.add(term.value() - cf.fbar());
    }
    return total.value();
}

}  // namespace nonconv
