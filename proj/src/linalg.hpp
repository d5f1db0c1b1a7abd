#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "error.hpp"

namespace nspod {

/// Dot product with a fixed 4-lane accumulation pattern. Every inner product
/// in the library goes through this kernel so that batched and per-sample
/// evaluation orders produce bitwise-identical sums.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    bool all_finite() const;

    static Matrix identity(std::size_t n);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
bool same_shape(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double frobenius_norm_sq(const Matrix& a);

/// Thin singular value decomposition a = u * diag(s) * vt with
/// r = min(rows, cols) columns in u and rows in vt.
struct SvdResult {
    Matrix u;                            // rows x r, orthonormal columns
    std::vector<double> singular_values; // length r, non-increasing, >= 0
    Matrix vt;                           // r x cols, orthonormal rows
};

/// One-sided Jacobi SVD. Deterministic: fixed sweep order and a sign
/// convention (first nonzero entry of each left singular vector is made
/// non-negative). Throws Error(numeric) with the remaining off-diagonal
/// residual if the sweep cap is exceeded.
SvdResult svd(const Matrix& a);

/// Sum of singular values.
double nuclear_norm(const Matrix& a);

/// u_r * v_r^T over the singular directions with sigma > rank_tol * sigma_max.
/// The zero matrix maps to the zero matrix. rank_tol must be in (0,1).
Matrix nuclear_subgradient(const Matrix& a, double rank_tol = 1e-7);

/// Singular value thresholding: u * diag(max(sigma - tau, 0)) * vt, the
/// proximal operator of tau * ||.||_*. An optional rank cap additionally
/// zeroes all singular values past the first max_rank ones.
Matrix svt(const Matrix& a, double tau, std::size_t max_rank = 0);

/// Number of singular values above rel_tol * sigma_max; 0 for the zero matrix.
std::size_t numerical_rank(const Matrix& a, double rel_tol);

double spectral_norm(const Matrix& a);

}  // namespace nspod
