#include "nonconv/linalg.hpp"

#include <cmath>

#include "nonconv/errors.hpp"

namespace nonconv {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols()) throw DomainError("ragged matrix rows");
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DomainError("matrix shape mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Matrix power(const Matrix& a, std::size_t n) {
    if (a.rows() != a.cols()) throw DomainError("power of a non-square matrix");
    Matrix result = Matrix::identity(a.rows());
    Matrix base = a;
    while (n > 0) {
        if (n & 1U) result = result * base;
        n >>= 1U;
        if (n > 0) base = base * base;
    }
    return result;
}

std::vector<double> left_multiply(std::span<const double> v, const Matrix& a) {
    if (v.size() != a.rows()) throw DomainError("vector/matrix shape mismatch");
    std::vector<double> out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (v[i] == 0.0) continue;
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += v[i] * a(i, j);
    }
    return out;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DomainError("distribution size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

PowerTable::PowerTable(const Matrix& base, std::size_t max_power) {
    powers_.reserve(max_power + 1);
    powers_.push_back(Matrix::identity(base.rows()));
    for (std::size_t n = 1; n <= max_power; ++n) powers_.push_back(powers_.back() * base);
}

}  // namespace nonconv
