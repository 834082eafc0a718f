#include "nonconv/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <boost/math/special_functions/gamma.hpp>

#include "nonconv/errors.hpp"
#include "nonconv/rng.hpp"
#include "nonconv/statistics.hpp"

namespace nonconv {

double phi_tail_bound(const MixingProfile& mixing, std::size_t cutoff) {
    const std::size_t len = mixing.table_length();
    double tail = 0.0;
    for (std::size_t g = cutoff + 1; g < len; ++g) tail += mixing.phi(g);
    if (mixing.vanishes_past_table()) return tail;
    const auto& decay = mixing.decay();
    if (!decay) throw DomainError("phi tail needs decay parameters or a vanishing table");
    // sum_{n > c} d exp(-a n^eta) <= integral_c^inf d exp(-a x^eta) dx with c = max(cutoff, len - 1).
    const double c = static_cast<double>(std::max(cutoff, len - 1));
    const double a = decay->a, d = decay->d, eta = decay->eta;
    if (eta == 1.0) return tail + d * std::exp(-a * (c + 1.0)) / (-std::expm1(-a));
    const double s = 1.0 / eta;
    return tail + d / eta * std::pow(a, -s) * boost::math::tgamma(s, a * std::pow(c, eta));
}

VarphiSum varphi_sum(const MixingProfile& mixing, std::size_t cutoff) {
    VarphiSum out;
    for (std::size_t n = 0; n <= cutoff; ++n) out.partial += mixing.phi(n);
    out.tail_bound = phi_tail_bound(mixing, cutoff);
    return out;
}

double MartingaleDecomposition::delta1_prime() const {
    return constants_.B * K_ * (varphi_.value() + static_cast<double>(r_) + 1.0);
}

double MartingaleDecomposition::delta2_prime() const {
    return constants_.B3 * K_ * (varphi_.value() + static_cast<double>(r_) + 1.0);
}

double MartingaleDecomposition::r_bound() const {
    return 2.0 * constants_.B * K_ * (varphi_.value() + static_cast<double>(r_) + 1.0);
}

double MartingaleDecomposition::difference_bound() const {
    return static_cast<double>(ell_) * constants_.B1 * K_ * (varphi_.value() + static_cast<double>(r_) + 1.0);
}

const Matrix& MartingaleDecomposition::gap_power(std::uint64_t g) const {
    if (g >= powers_.size()) throw DomainError("gap beyond the precomputed transition powers");
    return powers_[g];
}

double MartingaleDecomposition::conditional_term(std::size_t i, std::uint64_t s, std::uint64_t n,
                                                 std::span<const std::uint32_t> prefix) const {
    if (s <= n || s % i != 0) return 0.0;
    if (prefix.size() <= n) throw DomainError("path prefix shorter than the conditioning time");
    const std::uint64_t m = s / i;
    std::uint32_t atoms[16];
    std::size_t known = 0;
    while (known < i && (known + 1) * m <= n) {
        atoms[known] = prefix[(known + 1) * m];
        ++known;
    }
    const std::size_t S = chain_.state_count();
    // Integrate the unknown coordinates j = known+1..i forward from xi_n.
    std::function<double(std::size_t, std::uint64_t, std::uint32_t)> integrate =
        [&](std::size_t j, std::uint64_t prev_index, std::uint32_t prev_state) -> double {
        if (j > i) return cf_.component_at(i, {atoms, i});
        const std::uint64_t index = j * m;
        const Matrix& p = gap_power(index - prev_index);
        double total = 0.0;
        for (std::uint32_t x = 0; x < S; ++x) {
            const double w = p(prev_state, x);
            if (w == 0.0) continue;
            atoms[j - 1] = x;
            total += w * integrate(j + 1, index, x);
        }
        return total;
    };
    return integrate(known + 1, n, prefix[n]);
}

double MartingaleDecomposition::remainder(std::size_t i, std::uint64_t n, std::span<const std::uint32_t> prefix) const {
    CompensatedSum sum;
    const std::uint64_t first = (n / i + 1) * i;
    for (std::uint64_t s = first; s <= n + horizon_; s += i) sum.add(conditional_term(i, s, n, prefix));
    return sum.value();
}

MartingalePath MartingaleDecomposition::evaluate(std::span<const std::uint32_t> path) const {
    const std::size_t len = ell_ * N_ + 1;
    if (path.size() < len) throw DomainError("path shorter than ell N + 1");
    MartingalePath out;
    out.ell = ell_;
    out.length = len;
    out.R.assign(ell_ * len, 0.0);
    out.Y.assign(ell_ * len, 0.0);
    out.W.assign(ell_ * len, 0.0);
    out.M.assign(len, 0.0);
    std::uint32_t atoms[16];
    for (std::size_t i = 1; i <= ell_; ++i) {
        double* R = out.R.data() + (i - 1) * len;
        double* Y = out.Y.data() + (i - 1) * len;
        double* W = out.W.data() + (i - 1) * len;
        for (std::uint64_t n = 0; n < len; ++n) R[n] = remainder(i, n, path);
        for (std::uint64_t n = 1; n < len; ++n) {
            if (n % i == 0) {
                const std::uint64_t m = n / i;
                for (std::size_t j = 1; j <= i; ++j) atoms[j - 1] = path[j * m];
                Y[n] = cf_.component_at(i, {atoms, i});
            }
            W[n] = Y[n] + R[n] - R[n - 1];
        }
    }
    for (std::uint64_t n = 1; n < len; ++n) {
        CompensatedSum d;
        for (std::size_t i = 1; i <= ell_; ++i)
            if (n <= i * N_) d.add(out.w(i, n));
        out.M[n] = out.M[n - 1] + d.value();
    }
    CompensatedSum s;
    for (std::uint64_t n = 1; n <= N_; ++n) {
        for (std::size_t j = 1; j <= ell_; ++j) atoms[j - 1] = path[j * n];
        s.add(cf_.value_at({atoms, ell_}) - cf_.fbar());
    }
    out.S_N = s.value();
    return out;
}

MartingaleDecomposition build_decomposition(const ProcessModel& model, const CenteredObservable& cf,
                                            const IndexFamily& family, std::uint64_t N, MartingaleConstants constants,
                                            double truncation_target, std::size_t max_horizon) {
    if (family.kind() != IndexKind::linear) throw DomainError("martingale construction needs q_i(n) = i n");
    if (cf.ell() != family.ell()) throw DomainError("observable arity does not match the index family");
    if (cf.ell() > 16) throw DomainError("martingale construction supports ell <= 16");
    if (N == 0) throw DomainError("N must be at least 1");
    std::size_t r = 0;
    ProcessModel chain = model;
    if (model.kind() == ModelKind::doubling_map) {
        // Conditioning on the level-L cell sequence: the block chain carries the same information.
        chain = model.block_chain();
        r = model.dyadic().level;
    }
    if (!cf.exact() || cf.law().size() != chain.state_count())
        throw DomainError("martingale construction needs an exact decomposition over the chain states");
    MartingaleDecomposition d(chain, cf);
    d.N_ = N;
    d.ell_ = cf.ell();
    d.r_ = r;
    d.constants_ = constants;
    d.K_ = cf.observable().regularity().K;

    const std::size_t S = chain.state_count();
    std::vector<std::uint32_t> tuple(d.ell_);
    for (std::size_t i = 1; i <= d.ell_; ++i) {
        double sup = 0.0;
        std::size_t count = 1;
        for (std::size_t j = 0; j < i; ++j) count *= S;
        for (std::size_t code = 0; code < count; ++code) {
            std::size_t c = code;
            for (std::size_t j = i; j-- > 0;) {
                tuple[j] = static_cast<std::uint32_t>(c % S);
                c /= S;
            }
            sup = std::max(sup, std::abs(cf.component_at(i, {tuple.data(), i})));
        }
        d.component_sup_.push_back(sup);
    }

    const auto mixing = MixingProfile::of(chain);
    d.varphi_ = varphi_sum(mixing, std::min<std::size_t>(mixing.table_length(), 4096));
    // Tail of R beyond s = n + H: the last coordinate of each dropped term sits at distance m or
    // i m - n from the latest known information, so the term is at most 2 sup|F_i| (phi(m) + phi(im - n)).
    auto tail = [&](std::size_t H) {
        double t = 0.0;
        for (std::size_t i = 1; i <= d.ell_; ++i) {
            double part = phi_tail_bound(mixing, H);
            if (i > 1) part += phi_tail_bound(mixing, H / i);
            t += 2.0 * d.component_sup_[i - 1] * part;
        }
        return t;
    };
    std::size_t H = 1;
    while (tail(H) > truncation_target) {
        if (H >= max_horizon) throw DomainError("truncation target unreachable within the horizon limit");
        H = std::min(max_horizon, H * 2);
    }
    // Shrink back to the smallest adequate horizon.
    std::size_t lo = H / 2, hi = H;
    while (lo + 1 < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (mid >= 1 && tail(mid) <= truncation_target) hi = mid;
        else lo = mid;
    }
    d.horizon_ = std::max<std::size_t>(hi, 1);
    d.truncation_error_ = tail(d.horizon_);

    const std::size_t max_gap = d.ell_ * N + d.horizon_;
    if (static_cast<double>(S) * static_cast<double>(S) * static_cast<double>(max_gap + 1) > 5e7)
        throw BudgetError("transition power cache exceeds the budget");
    d.powers_.reserve(max_gap + 1);
    d.powers_.push_back(Matrix::identity(S));
    for (std::size_t g = 1; g <= max_gap; ++g) d.powers_.push_back(d.powers_.back() * chain.transition());
    return d;
}

namespace {

// E[W_n^{(N)} | xi_0..xi_{n-1}] with prefix holding n + 1 slots; the last one is overwritten.
double expected_difference(const MartingaleDecomposition& d, std::uint64_t n, std::vector<std::uint32_t>& prefix) {
    const Matrix& p = d.chain().transition();
    const std::uint32_t last = prefix[n - 1];
    const std::size_t S = d.chain().state_count();
    const std::size_t ell = d.ell();
    std::vector<double> before(ell);
    for (std::size_t i = 1; i <= ell; ++i) before[i - 1] = d.remainder(i, n - 1, prefix);
    std::uint32_t atoms[16];
    CompensatedSum total;
    for (std::uint32_t x = 0; x < S; ++x) {
        const double w = p(last, x);
        if (w == 0.0) continue;
        prefix[n] = x;
        CompensatedSum diff;
        for (std::size_t i = 1; i <= ell; ++i) {
            if (n > i * d.N()) continue;
            double y = 0.0;
            if (n % i == 0) {
                const std::uint64_t m = n / i;
                for (std::size_t j = 1; j <= i; ++j) atoms[j - 1] = prefix[j * m];
                y = d.observable().component_at(i, {atoms, i});
            }
            diff.add(y + d.remainder(i, n, prefix) - before[i - 1]);
        }
        total.add(w * diff.value());
    }
    return total.value();
}

void record(MartingaleCheck& check, double value, std::uint64_t n, std::span<const std::uint32_t> past) {
    ++check.pasts;
    if (std::abs(value) > check.worst || check.pasts == 1) {
        check.worst = std::max(check.worst, std::abs(value));
        check.worst_n = n;
        check.worst_past.assign(past.begin(), past.end());
    }
}

}  // namespace

MartingaleCheck check_martingale_exhaustive(const MartingaleDecomposition& decomp, double tol, std::size_t budget) {
    const std::size_t S = decomp.chain().state_count();
    const std::size_t len = decomp.ell() * decomp.N() + 1;
    double paths = 1.0;
    for (std::size_t k = 0; k < len; ++k) paths *= static_cast<double>(S);
    if (paths > static_cast<double>(budget)) throw BudgetError("exhaustive martingale check exceeds the path budget");
    MartingaleCheck check;
    check.mode = MartingaleCheck::Mode::exhaustive;
    // Each E[W_n | past] carries the truncation error of R_n and R_{n-1}.
    check.tolerance = tol + 2.0 * decomp.truncation_error();
    std::vector<std::uint32_t> prefix(len, 0);
    const auto pi = decomp.chain().stationary();
    std::function<void(std::uint64_t)> walk = [&](std::uint64_t n) {
        // prefix[0..n-1] is fixed; test E[W_n | prefix] and descend.
        if (n >= len) return;
        const double v = expected_difference(decomp, n, prefix);
        record(check, v, n, {prefix.data(), n});
        for (std::uint32_t x = 0; x < S; ++x) {
            if (decomp.chain().transition()(prefix[n - 1], x) == 0.0) continue;
            prefix[n] = x;
            walk(n + 1);
        }
    };
    for (std::uint32_t x0 = 0; x0 < S; ++x0) {
        if (pi[x0] == 0.0) continue;
        prefix[0] = x0;
        walk(1);
    }
    check.pass = check.worst <= check.tolerance;
    return check;
}

std::vector<std::uint32_t> martingale_path(const MartingaleDecomposition& decomp, std::uint64_t key) {
    return sample_path(decomp.chain(), decomp.ell() * decomp.N() + 1, key);
}

MartingaleCheck check_martingale_sampled(const MartingaleDecomposition& decomp, std::span<const std::uint64_t> keys,
                                         double tol) {
    MartingaleCheck check;
    check.mode = MartingaleCheck::Mode::sampled;
    check.tolerance = tol + 2.0 * decomp.truncation_error();
    const std::size_t len = decomp.ell() * decomp.N() + 1;
    for (std::uint64_t key : keys) {
        const auto path = martingale_path(decomp, key);
        std::vector<std::uint32_t> prefix(path.begin(), path.end());
        for (std::uint64_t n = 1; n < len; ++n) {
            const double v = expected_difference(decomp, n, prefix);
            record(check, v, n, {path.data(), n});
            prefix[n] = path[n];
        }
    }
    check.pass = check.worst <= check.tolerance;
    return check;
}

GapReport sup_gap(const MartingaleDecomposition& decomp, std::span<const std::uint64_t> keys,
                  std::span<const double> expected_sums) {
    if (!expected_sums.empty() && expected_sums.size() != keys.size())
        throw DomainError("sums and keys differ in number");
    GapReport rep;
    rep.delta2_prime = decomp.delta2_prime();
    const std::size_t ell = decomp.ell();
    const std::uint64_t N = decomp.N();
    rep.sup_differences.assign(ell * N, 0.0);
    for (std::size_t k = 0; k < keys.size(); ++k) {
        const auto path = martingale_path(decomp, keys[k]);
        const auto mp = decomp.evaluate(path);
        if (!expected_sums.empty() && std::abs(expected_sums[k] - mp.S_N) > 1e-9 * (1.0 + std::abs(mp.S_N)))
            throw DomainError("seed mismatch: S_N along the decomposition path differs from the supplied sum");
        rep.max_gap = std::max(rep.max_gap, std::abs(mp.gap()));
        double telescoped = 0.0;
        for (std::size_t i = 1; i <= ell; ++i) {
            telescoped += mp.r(i, 0) - mp.r(i, i * N);
            for (std::uint64_t n = 0; n < mp.length; ++n) rep.max_remainder = std::max(rep.max_remainder, std::abs(mp.r(i, n)));
        }
        rep.max_telescoping_error = std::max(rep.max_telescoping_error, std::abs(mp.gap() - telescoped));
        for (std::uint64_t n = 1; n < mp.length; ++n) {
            const double w = std::abs(mp.difference(n));
            rep.sup_differences[n - 1] = std::max(rep.sup_differences[n - 1], w);
            rep.max_difference = std::max(rep.max_difference, w);
        }
        rep.terminal_values.push_back(mp.M.back());
        rep.sums.push_back(mp.S_N);
        ++rep.paths;
    }
    rep.pass = rep.max_gap <= rep.delta2_prime;
    return rep;
}

namespace {

struct MgfEstimate {
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool dominated = false;
};

MgfEstimate mgf(std::span<const double> values, double lambda, std::size_t resamples, std::uint64_t seed) {
    std::vector<double> e(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) e[k] = std::exp(lambda * values[k]);
    CompensatedSum s;
    double top = 0.0;
    for (double v : e) {
        s.add(v);
        top = std::max(top, v);
    }
    MgfEstimate out;
    out.mean = s.value() / static_cast<double>(e.size());
    out.dominated = top > 0.5 * s.value();
    const auto boot = bootstrap(
        e.size(),
        [&](std::span<const std::uint32_t> counts) {
            CompensatedSum t;
            for (std::size_t k = 0; k < counts.size(); ++k)
                if (counts[k]) t.add(static_cast<double>(counts[k]) * e[k]);
            return t.value() / static_cast<double>(e.size());
        },
        resamples, seed);
    out.lower = boot.lower;
    out.upper = boot.upper;
    return out;
}

}  // namespace

AzumaReport azuma_mgf_check(const GapReport& gaps, std::span<const double> lambdas, double B, double delta1,
                            double delta2, std::uint64_t N, std::size_t ell, std::size_t resamples, std::uint64_t seed) {
    if (gaps.paths < 2) throw DomainError("MGF check needs at least two paths");
    AzumaReport rep;
    rep.pass = true;
    double sum_sq = 0.0;
    for (double w : gaps.sup_differences) sum_sq += w * w;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const double lambda = lambdas[k];
        AzumaRow row;
        row.lambda = lambda;
        const auto m = mgf(gaps.terminal_values, lambda, resamples, stream_key(seed, 2 * k));
        const auto s = mgf(gaps.sums, lambda, resamples, stream_key(seed, 2 * k + 1));
        row.mgf_martingale = m.mean;
        row.mgf_martingale_upper = m.upper;
        row.azuma_bound = std::exp(lambda * lambda * sum_sq);
        row.mgf_sum = s.mean;
        row.mgf_sum_lower = s.lower;
        row.mgf_sum_upper = s.upper;
        row.display_bound = std::exp(B * lambda * lambda * static_cast<double>(N) * static_cast<double>(ell) * delta1 +
                                     B * lambda * delta2);
        row.inconclusive = m.dominated || s.dominated;
        // Azuma is a theorem about M: test it at the upper edge. The display is tested for refutation.
        row.pass_azuma = row.inconclusive || row.mgf_martingale_upper <= row.azuma_bound * (1.0 + 1e-12);
        row.pass_display = row.inconclusive || row.mgf_sum_lower <= row.display_bound;
        rep.pass = rep.pass && row.pass_azuma && row.pass_display;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace nonconv
