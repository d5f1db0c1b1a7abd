#pragma once

#include <vector>

#include "data.hpp"
#include "linalg.hpp"

namespace nspod {

/// Per-frame shift values on the time grid: K rows, N columns.
struct ShiftSample {
    Matrix values;  // K x N

    std::size_t frames() const { return values.rows(); }
    void validate(std::size_t n_times) const;
};

enum class ShiftDirection { forward, adjoint };

/// Discrete shift operator on one frame: forward resamples column n at
/// x_m - delta(t_n) by linear interpolation with zero padding outside the
/// domain; adjoint is the exact transpose of that interpolation.
Matrix shift_operator(const Matrix& field, const std::vector<double>& shifts, const Grid& grid,
                      ShiftDirection direction);

struct RefineOptions {
    double lambda = 0.0;
    std::size_t max_iter = 5000;
    double rel_stop = 1e-8;
    std::vector<std::size_t> prescribed_ranks;  // empty: plain nuclear-norm prox
};

struct RefineReport {
    std::size_t iterations_run = 0;
    double final_relative_error = 0.0;
    double final_objective = 0.0;
    std::vector<std::size_t> ranks;  // numerical rank per frame at 1%
    bool converged = false;
};

/// Fixed-shift convex refinement by proximal gradient with per-frame
/// singular value thresholding. Each iteration applies
///   Q^k <- svt(Q^k - (1/K) * (T^k)^T (sum_j T^j Q^j - Q), lambda / (2K))
/// which is the proximal gradient step for the fixed-shift objective
/// ||Q - sum_k T^k Q^k||_F^2 + lambda * sum_k ||Q^k||_*, so that objective is
/// non-increasing across iterations. With prescribed_ranks set, the svt
/// output is additionally truncated to the given rank per frame.
/// An optional objective_history receives the objective before iteration 1
/// and after every iteration.
std::pair<std::vector<Matrix>, RefineReport> refine_fields(
    const SnapshotMatrix& q, const ShiftSample& shifts, const std::vector<Matrix>& init_fields,
    const RefineOptions& options, std::vector<double>* objective_history = nullptr);

/// Fixed-shift objective value for the current fields.
double fixed_shift_objective(const SnapshotMatrix& q, const ShiftSample& shifts,
                             const std::vector<Matrix>& fields, double lambda);

}  // namespace nspod
