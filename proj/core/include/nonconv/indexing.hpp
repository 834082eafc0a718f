#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nonconv {

enum class IndexKind { linear, polynomial, power_sparse, custom };

std::string to_string(IndexKind kind);

// Index maps q_1 < ... < q_l, each strictly increasing on [ray_start, inf).
// Maps are addressed 1-based: map(i, n) is q_i(n).
class IndexFamily {
public:
    using Map = std::function<std::uint64_t(std::uint64_t)>;

    // q_i(n) = i * n.
    static IndexFamily linear(std::size_t ell);
    // q_i(n) = sum_k c_{i,k} n^k; coefficients listed from the constant term up.
    static IndexFamily polynomial(std::vector<std::vector<std::int64_t>> coefficients, std::uint64_t ray_start = 1);
    // q_i(n) = p_i(n^l) with integer polynomials p_i.
    static IndexFamily power_sparse(std::vector<std::vector<std::int64_t>> coefficients, unsigned l,
                                    std::uint64_t ray_start = 1);
    static IndexFamily custom(std::vector<Map> maps, std::uint64_t ray_start, std::string name);

    IndexKind kind() const noexcept { return kind_; }
    std::size_t ell() const noexcept { return ell_; }
    std::uint64_t ray_start() const noexcept { return ray_start_; }
    unsigned sparse_power() const noexcept { return sparse_power_; }
    const std::vector<std::vector<std::int64_t>>& coefficients() const noexcept { return coefficients_; }
    const std::string& name() const noexcept { return name_; }

    std::uint64_t map(std::size_t i, std::uint64_t n) const;

    // Checks ordering and strict monotonicity on [ray_start, up_to]; throws DomainError on failure.
    void validate(std::uint64_t up_to) const;
    // Spot check that every gap q_i(n) - q_{i-1}(n) grows along a geometric sequence of n up to up_to.
    bool gaps_diverge(std::uint64_t up_to) const;

    // Sorted distinct set {q_i(n) : 1 <= i <= l, first <= n <= last}.
    std::vector<std::uint64_t> index_set(std::uint64_t first, std::uint64_t last) const;

private:
    IndexKind kind_ = IndexKind::linear;
    std::size_t ell_ = 1;
    std::uint64_t ray_start_ = 1;
    unsigned sparse_power_ = 1;
    std::vector<std::vector<std::int64_t>> coefficients_;
    std::vector<Map> maps_;
    std::string name_;
};

// min_{i,j} |i n - j m| for a linear family.
std::uint64_t rho(const IndexFamily& family, std::uint64_t n, std::uint64_t m);

// min_{i,j} |q_i(n) - q_j(m)|; n and m must be at least the ray start.
std::uint64_t rho_tilde(const IndexFamily& family, std::uint64_t n, std::uint64_t m);

// {m in [1, N] : rho(n, m) <= s}, using rho_tilde for nonlinear families (then m starts at the ray start).
std::vector<std::uint64_t> neighborhood(const IndexFamily& family, std::uint64_t n, std::uint64_t N, std::uint64_t s);

struct InverseLipschitzReport {
    double q = 1.0;           // max(1, sup ratio): the certified constant on the scan
    double sup_ratio = 0.0;   // sup |q^{-1}(a) - q^{-1}(b)| / (1 + |a - b|)
    std::uint64_t first = 0;  // scanned a-range
    std::uint64_t last = 0;
    bool blowup = false;      // the ratio kept growing across the scan
};

// Scans integer pairs a, b in [first, last] (at most 4096 points) with the inverse of each q_j
// extended piecewise linearly between integer arguments.
InverseLipschitzReport inverse_lipschitz_Q(const IndexFamily& family, std::uint64_t first, std::uint64_t last);

// rho(D1, D2) as the minimum of rho over pairs.
std::uint64_t set_distance_pairwise(const IndexFamily& family, std::span<const std::uint64_t> d1,
                                    std::span<const std::uint64_t> d2);
// The same distance as dist(T_1, T_2) with T_i = {j t : t in D_i, 1 <= j <= l}.
std::uint64_t set_distance_dilated(const IndexFamily& family, std::span<const std::uint64_t> d1,
                                   std::span<const std::uint64_t> d2);

}  // namespace nonconv
