#include "nonconv/indexing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nonconv/errors.hpp"

namespace nonconv {

std::string to_string(IndexKind kind) {
    switch (kind) {
        case IndexKind::linear: return "linear";
        case IndexKind::polynomial: return "polynomial";
        case IndexKind::power_sparse: return "power-sparse";
        case IndexKind::custom: return "custom";
    }
    return "unknown";
}

namespace {

__extension__ typedef __int128 i128;

std::uint64_t eval_polynomial(const std::vector<std::int64_t>& c, std::uint64_t x) {
    // Horner in 128-bit with an overflow guard at each step.
    i128 acc = 0;
    constexpr i128 limit = static_cast<i128>(std::numeric_limits<std::int64_t>::max());
    for (std::size_t k = c.size(); k-- > 0;) {
        acc = acc * static_cast<i128>(x) + c[k];
        if (acc > limit || acc < -limit) throw DomainError("index map overflows 63 bits");
    }
    if (acc < 0) throw DomainError("index map takes a negative value");
    return static_cast<std::uint64_t>(acc);
}

std::uint64_t checked_power(std::uint64_t n, unsigned l) {
    i128 v = 1;
    for (unsigned k = 0; k < l; ++k) {
        v *= n;
        if (v > static_cast<i128>(std::numeric_limits<std::int64_t>::max())) throw DomainError("n^l overflows 63 bits");
    }
    return static_cast<std::uint64_t>(v);
}

void check_coefficients(const std::vector<std::vector<std::int64_t>>& c) {
    if (c.empty()) throw DomainError("index family needs at least one map");
    for (const auto& p : c) {
        if (p.empty() || p.back() <= 0) throw DomainError("polynomial index maps need a positive leading coefficient");
        if (p.size() < 2) throw DomainError("constant index maps are not increasing");
    }
}

std::uint64_t absdiff(std::uint64_t a, std::uint64_t b) { return a > b ? a - b : b - a; }

}  // namespace

IndexFamily IndexFamily::linear(std::size_t ell) {
    if (ell == 0) throw DomainError("ell must be positive");
    IndexFamily f;
    f.kind_ = IndexKind::linear;
    f.ell_ = ell;
    f.ray_start_ = 1;
    f.name_ = "linear";
    for (std::size_t i = 1; i <= ell; ++i) f.coefficients_.push_back({0, static_cast<std::int64_t>(i)});
    return f;
}

IndexFamily IndexFamily::polynomial(std::vector<std::vector<std::int64_t>> coefficients, std::uint64_t ray_start) {
    check_coefficients(coefficients);
    IndexFamily f;
    f.kind_ = IndexKind::polynomial;
    f.ell_ = coefficients.size();
    f.ray_start_ = std::max<std::uint64_t>(ray_start, 1);
    f.coefficients_ = std::move(coefficients);
    f.name_ = "polynomial";
    return f;
}

IndexFamily IndexFamily::power_sparse(std::vector<std::vector<std::int64_t>> coefficients, unsigned l,
                                      std::uint64_t ray_start) {
    check_coefficients(coefficients);
    if (l == 0) throw DomainError("sparse power must be positive");
    IndexFamily f;
    f.kind_ = IndexKind::power_sparse;
    f.ell_ = coefficients.size();
    f.ray_start_ = std::max<std::uint64_t>(ray_start, 1);
    f.sparse_power_ = l;
    f.coefficients_ = std::move(coefficients);
    f.name_ = "power-sparse";
    return f;
}

IndexFamily IndexFamily::custom(std::vector<Map> maps, std::uint64_t ray_start, std::string name) {
    if (maps.empty()) throw DomainError("index family needs at least one map");
    IndexFamily f;
    f.kind_ = IndexKind::custom;
    f.ell_ = maps.size();
    f.ray_start_ = std::max<std::uint64_t>(ray_start, 1);
    f.maps_ = std::move(maps);
    f.name_ = std::move(name);
    return f;
}

std::uint64_t IndexFamily::map(std::size_t i, std::uint64_t n) const {
    if (i == 0 || i > ell_) throw DomainError("map index out of range");
    switch (kind_) {
        case IndexKind::linear: {
            const i128 v = static_cast<i128>(i) * n;
            if (v > static_cast<i128>(std::numeric_limits<std::int64_t>::max())) throw DomainError("index map overflows 63 bits");
            return static_cast<std::uint64_t>(v);
        }
        case IndexKind::polynomial: return eval_polynomial(coefficients_[i - 1], n);
        case IndexKind::power_sparse: return eval_polynomial(coefficients_[i - 1], checked_power(n, sparse_power_));
        case IndexKind::custom: return maps_[i - 1](n);
    }
    return 0;
}

void IndexFamily::validate(std::uint64_t up_to) const {
    for (std::uint64_t n = ray_start_; n <= up_to; ++n) {
        for (std::size_t i = 1; i <= ell_; ++i) {
            const std::uint64_t v = map(i, n);
            if (i > 1 && map(i - 1, n) >= v)
                throw DomainError("q_" + std::to_string(i - 1) + "(" + std::to_string(n) + ") >= q_" + std::to_string(i) + "(n)");
            if (n > ray_start_ && map(i, n - 1) >= v)
                throw DomainError("q_" + std::to_string(i) + " is not strictly increasing at n = " + std::to_string(n));
        }
    }
}

bool IndexFamily::gaps_diverge(std::uint64_t up_to) const {
    if (ell_ < 2) return true;
    for (std::size_t i = 2; i <= ell_; ++i) {
        std::uint64_t previous = 0;
        bool first = true;
        for (std::uint64_t n = std::max<std::uint64_t>(ray_start_, 1); n <= up_to; n *= 2) {
            const std::uint64_t gap = map(i, n) - map(i - 1, n);
            if (!first && gap <= previous) return false;
            previous = gap;
            first = false;
        }
    }
    return true;
}

std::vector<std::uint64_t> IndexFamily::index_set(std::uint64_t first, std::uint64_t last) const {
    std::vector<std::uint64_t> out;
    if (last < first) return out;
    out.reserve(static_cast<std::size_t>(last - first + 1) * ell_);
    for (std::uint64_t n = first; n <= last; ++n)
        for (std::size_t i = 1; i <= ell_; ++i) out.push_back(map(i, n));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::uint64_t rho(const IndexFamily& family, std::uint64_t n, std::uint64_t m) {
    if (family.kind() != IndexKind::linear) throw DomainError("rho is defined for linear families; use rho_tilde");
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t ell = family.ell();
    for (std::uint64_t i = 1; i <= ell; ++i)
        for (std::uint64_t j = 1; j <= ell; ++j) best = std::min(best, absdiff(i * n, j * m));
    return best;
}

std::uint64_t rho_tilde(const IndexFamily& family, std::uint64_t n, std::uint64_t m) {
    if (n < family.ray_start() || m < family.ray_start()) throw DomainError("index below the ray start");
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t i = 1; i <= family.ell(); ++i) {
        const std::uint64_t a = family.map(i, n);
        for (std::size_t j = 1; j <= family.ell(); ++j) best = std::min(best, absdiff(a, family.map(j, m)));
    }
    return best;
}

std::vector<std::uint64_t> neighborhood(const IndexFamily& family, std::uint64_t n, std::uint64_t N, std::uint64_t s) {
    if (n < 1 || n > N) throw DomainError("neighborhood requires 1 <= n <= N");
    std::vector<std::uint64_t> out;
    if (family.kind() == IndexKind::linear) {
        for (std::uint64_t m = 1; m <= N; ++m)
            if (rho(family, n, m) <= s) out.push_back(m);
    } else {
        for (std::uint64_t m = family.ray_start(); m <= N; ++m)
            if (rho_tilde(family, n, m) <= s) out.push_back(m);
    }
    return out;
}

namespace {

// Piecewise-linear inverse of an increasing map through the points (q(n), n).
class PiecewiseInverse {
public:
    PiecewiseInverse(const IndexFamily& family, std::size_t j, std::uint64_t last) {
        std::uint64_t n = family.ray_start();
        std::uint64_t v = family.map(j, n);
        points_.push_back({v, n});
        while (v < last) {
            ++n;
            const std::uint64_t next = family.map(j, n);
            if (next <= v) throw DomainError("index map q_" + std::to_string(j) + " is not monotone at n = " + std::to_string(n));
            v = next;
            points_.push_back({v, n});
        }
    }

    std::uint64_t domain_start() const { return points_.front().first; }

    double operator()(std::uint64_t a) const {
        const auto it = std::lower_bound(points_.begin(), points_.end(), a,
                                         [](const auto& p, std::uint64_t x) { return p.first < x; });
        if (it->first == a) return static_cast<double>(it->second);
        const auto prev = it - 1;
        const double t = static_cast<double>(a - prev->first) / static_cast<double>(it->first - prev->first);
        return static_cast<double>(prev->second) + t;
    }

private:
    std::vector<std::pair<std::uint64_t, std::uint64_t>> points_;
};

}  // namespace

InverseLipschitzReport inverse_lipschitz_Q(const IndexFamily& family, std::uint64_t first, std::uint64_t last) {
    if (last < first) throw DomainError("empty scan range");
    if (last - first + 1 > 4096) throw BudgetError("inverse Lipschitz scan is limited to 4096 points");
    InverseLipschitzReport report;
    report.first = first;
    report.last = last;
    double half_ratio = 0.0;
    const std::uint64_t midpoint = first + (last - first) / 2;
    for (std::size_t j = 1; j <= family.ell(); ++j) {
        const PiecewiseInverse inverse(family, j, last);
        const std::uint64_t lo = std::max(first, inverse.domain_start());
        if (lo > last) continue;
        std::vector<double> values(static_cast<std::size_t>(last - lo + 1));
        for (std::uint64_t a = lo; a <= last; ++a) values[a - lo] = inverse(a);
        for (std::size_t x = 0; x < values.size(); ++x)
            for (std::size_t y = x + 1; y < values.size(); ++y) {
                const double ratio = std::abs(values[y] - values[x]) / (1.0 + static_cast<double>(y - x));
                report.sup_ratio = std::max(report.sup_ratio, ratio);
                if (lo + y <= midpoint) half_ratio = std::max(half_ratio, ratio);
            }
    }
    report.q = std::max(1.0, report.sup_ratio);
    // Growth of the supremum between the first half and the whole scan signals an unbounded Q.
    report.blowup = report.sup_ratio > 1.0 && report.sup_ratio > 1.5 * half_ratio;
    return report;
}

std::uint64_t set_distance_pairwise(const IndexFamily& family, std::span<const std::uint64_t> d1,
                                    std::span<const std::uint64_t> d2) {
    if (d1.empty() || d2.empty()) throw DomainError("set distance needs nonempty sets");
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    for (auto n : d1)
        for (auto m : d2) best = std::min(best, rho(family, n, m));
    return best;
}

std::uint64_t set_distance_dilated(const IndexFamily& family, std::span<const std::uint64_t> d1,
                                   std::span<const std::uint64_t> d2) {
    if (family.kind() != IndexKind::linear) throw DomainError("dilated set distance is defined for linear families");
    if (d1.empty() || d2.empty()) throw DomainError("set distance needs nonempty sets");
    auto dilate = [&](std::span<const std::uint64_t> d) {
        std::vector<std::uint64_t> t;
        for (auto x : d)
            for (std::uint64_t j = 1; j <= family.ell(); ++j) t.push_back(j * x);
        std::sort(t.begin(), t.end());
        return t;
    };
    const auto t1 = dilate(d1);
    const auto t2 = dilate(d2);
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    std::size_t a = 0, b = 0;
    while (a < t1.size() && b < t2.size()) {
        best = std::min(best, absdiff(t1[a], t2[b]));
        if (t1[a] < t2[b]) ++a; else ++b;
    }
    return best;
}

}  // namespace nonconv
