#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nspod {

namespace {

void require_finite(const Matrix& a, const char* op) {
    if (!a.all_finite())
        fail(ErrorCode::invalid_argument, std::string(op) + ": matrix has non-finite entries");
}

std::string dim_str(const Matrix& a) {
    std::ostringstream os;
    os << a.rows() << "x" << a.cols();
    return os.str();
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_)
        fail(ErrorCode::invalid_argument, "Matrix: entry count does not match rows*cols");
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool same_shape(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (!same_shape(a, b))
        fail(ErrorCode::invalid_argument, "matrix add: shape mismatch " + dim_str(a) + " vs " + dim_str(b));
    Matrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) r.data()[i] = a.data()[i] + b.data()[i];
    return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (!same_shape(a, b))
        fail(ErrorCode::invalid_argument, "matrix sub: shape mismatch " + dim_str(a) + " vs " + dim_str(b));
    Matrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) r.data()[i] = a.data()[i] - b.data()[i];
    return r;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) r.data()[i] = s * a.data()[i];
    return r;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        fail(ErrorCode::invalid_argument, "matmul: inner dimensions differ " + dim_str(a) + " vs " + dim_str(b));
    Matrix bt = transpose(b);
    Matrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j)
            r(i, j) = dot(a.row(i), bt.row(j), a.cols());
    return r;
}

Matrix transpose(const Matrix& a) {
    Matrix r(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            r(j, i) = a(i, j);
    return r;
}

double frobenius_norm_sq(const Matrix& a) {
    return dot(a.data(), a.data(), a.size());
}

double frobenius_norm(const Matrix& a) {
    return std::sqrt(frobenius_norm_sq(a));
}

namespace {

// One-sided Jacobi on a tall matrix held as column-major work storage.
// Rotates column pairs of W until all columns are pairwise orthogonal,
// accumulating the rotations into V (also column-major, n x n).
struct JacobiResult {
    std::vector<double> w;  // m x n, column-major
    std::vector<double> v;  // n x n, column-major
    bool converged = false;
    double residual = 0.0;  // max |<wp,wq>| / (|wp||wq|) seen in the last sweep
};

JacobiResult one_sided_jacobi(const Matrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    JacobiResult res;
    res.w.assign(m * n, 0.0);
    res.v.assign(n * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            res.w[j * m + i] = a(i, j);
    for (std::size_t j = 0; j < n; ++j) res.v[j * n + j] = 1.0;

    const double tol = 1e-12;
    const std::size_t max_sweeps = 100 * std::max(m, n);

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        std::size_t rotations = 0;
        double worst = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* wp = res.w.data() + p * m;
                double* wq = res.w.data() + q * m;
                const double app = dot(wp, wp, m);
                const double aqq = dot(wq, wq, m);
                const double apq = dot(wp, wq, m);
                const double scale = std::sqrt(app * aqq);
                if (scale == 0.0) continue;
                worst = std::max(worst, std::abs(apq) / scale);
                if (std::abs(apq) <= tol * scale) continue;

                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < m; ++i) {
                    const double xp = wp[i], xq = wq[i];
                    wp[i] = c * xp - s * xq;
                    wq[i] = s * xp + c * xq;
                }
                double* vp = res.v.data() + p * n;
                double* vq = res.v.data() + q * n;
                for (std::size_t i = 0; i < n; ++i) {
                    const double xp = vp[i], xq = vq[i];
                    vp[i] = c * xp - s * xq;
                    vq[i] = s * xp + c * xq;
                }
                ++rotations;
            }
        }
        res.residual = worst;
        if (rotations == 0) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    JacobiResult jac = one_sided_jacobi(a);
    if (!jac.converged) {
        std::ostringstream os;
        os << "svd: Jacobi sweeps did not converge on " << dim_str(a)
           << " matrix, residual " << jac.residual;
        fail(ErrorCode::numeric, os.str());
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j)
        sigma[j] = std::sqrt(dot(jac.w.data() + j * m, jac.w.data() + j * m, m));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult out;
    out.u = Matrix(m, n);
    out.vt = Matrix(n, n);
    out.singular_values.resize(n);

    const double sigma_max = sigma[order[0]];
    // Columns whose singular value underflows get an orthonormal filler so
    // u keeps orthonormal columns even for rank-deficient input.
    const double cutoff = sigma_max * 1e-290;

    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.singular_values[k] = sigma[j];
        if (sigma[j] > cutoff && sigma[j] > 0.0) {
            const double inv = 1.0 / sigma[j];
            for (std::size_t i = 0; i < m; ++i)
                out.u(i, k) = jac.w[j * m + i] * inv;
        } else {
            // Gram-Schmidt a canonical basis vector against the columns so far.
            std::vector<double> cand(m);
            bool placed = false;
            for (std::size_t e = 0; e < m && !placed; ++e) {
                std::fill(cand.begin(), cand.end(), 0.0);
                cand[e] = 1.0;
                for (int pass = 0; pass < 2; ++pass) {
                    for (std::size_t c = 0; c < k; ++c) {
                        double proj = 0.0;
                        for (std::size_t i = 0; i < m; ++i) proj += cand[i] * out.u(i, c);
                        for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * out.u(i, c);
                    }
                }
                double nrm = std::sqrt(dot(cand.data(), cand.data(), m));
                if (nrm > 0.5) {
                    for (std::size_t i = 0; i < m; ++i) out.u(i, k) = cand[i] / nrm;
                    placed = true;
                }
            }
            if (!placed)
                fail(ErrorCode::numeric, "svd: failed to complete orthonormal basis");
        }
        for (std::size_t i = 0; i < n; ++i)
            out.vt(k, i) = jac.v[j * n + i];
    }

    // Sign convention: first nonzero entry of each left singular vector >= 0.
    for (std::size_t k = 0; k < n; ++k) {
        double lead = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (out.u(i, k) != 0.0) {
                lead = out.u(i, k);
                break;
            }
        }
        if (lead < 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, k) = -out.u(i, k);
            for (std::size_t i = 0; i < n; ++i) out.vt(k, i) = -out.vt(k, i);
        }
    }
    return out;
}

}  // namespace

SvdResult svd(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0)
        fail(ErrorCode::invalid_argument, "svd: empty matrix");
    require_finite(a, "svd");
    if (a.rows() >= a.cols()) return svd_tall(a);
    // a = u s vt  <=>  a^T = v s u^T
    SvdResult t = svd_tall(transpose(a));
    SvdResult out;
    out.singular_values = std::move(t.singular_values);
    out.u = transpose(t.vt);
    out.vt = transpose(t.u);
    return out;
}

double nuclear_norm(const Matrix& a) {
    SvdResult r = svd(a);
    double s = 0.0;
    for (double v : r.singular_values) s += v;
    return s;
}

Matrix nuclear_subgradient(const Matrix& a, double rank_tol) {
    if (!(rank_tol > 0.0 && rank_tol < 1.0))
        fail(ErrorCode::invalid_argument, "nuclear_subgradient: rank_tol must be in (0,1)");
    SvdResult r = svd(a);
    const double sigma_max = r.singular_values.empty() ? 0.0 : r.singular_values[0];
    Matrix g(a.rows(), a.cols());
    for (std::size_t k = 0; k < r.singular_values.size(); ++k) {
        if (!(r.singular_values[k] > rank_tol * sigma_max)) break;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double uik = r.u(i, k);
            for (std::size_t j = 0; j < a.cols(); ++j)
                g(i, j) += uik * r.vt(k, j);
        }
    }
    return g;
}

Matrix svt(const Matrix& a, double tau, std::size_t max_rank) {
    if (!(tau >= 0.0))
        fail(ErrorCode::invalid_argument, "svt: tau must be >= 0");
    SvdResult r = svd(a);
    Matrix out(a.rows(), a.cols());
    const std::size_t rank_cap =
        max_rank == 0 ? r.singular_values.size() : std::min(max_rank, r.singular_values.size());
    for (std::size_t k = 0; k < rank_cap; ++k) {
        const double s = r.singular_values[k] - tau;
        if (s <= 0.0) break;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double us = r.u(i, k) * s;
            for (std::size_t j = 0; j < a.cols(); ++j)
                out(i, j) += us * r.vt(k, j);
        }
    }
    return out;
}

std::size_t numerical_rank(const Matrix& a, double rel_tol) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        fail(ErrorCode::invalid_argument, "numerical_rank: rel_tol must be in (0,1)");
    SvdResult r = svd(a);
    const double sigma_max = r.singular_values.empty() ? 0.0 : r.singular_values[0];
    std::size_t count = 0;
    for (double s : r.singular_values)
        if (s > rel_tol * sigma_max && s > 0.0) ++count;
    return count;
}

double spectral_norm(const Matrix& a) {
    SvdResult r = svd(a);
    return r.singular_values.empty() ? 0.0 : r.singular_values[0];
}

}  // namespace nspod
