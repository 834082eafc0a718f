#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nonconv {

// Small dense row-major matrix. Transition matrices here have at most a
// few thousand states, so nothing fancier is needed.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);

// a^n by repeated squaring; a must be square.
Matrix power(const Matrix& a, std::size_t n);

// Row vector times matrix.
std::vector<double> left_multiply(std::span<const double> v, const Matrix& a);

// Total-variation distance 1/2 * sum |p - q|.
double total_variation(std::span<const double> p, std::span<const double> q);

// Powers P^0, P^1, ..., P^max_power, computed once and shared read-only.
class PowerTable {
public:
    PowerTable() = default;
    PowerTable(const Matrix& base, std::size_t max_power);

    std::size_t max_power() const noexcept { return powers_.empty() ? 0 : powers_.size() - 1; }
    const Matrix& operator[](std::size_t n) const { return powers_.at(n); }

private:
    std::vector<Matrix> powers_;
};

}  // namespace nonconv
