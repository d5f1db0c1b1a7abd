#pragma once

#include <vector>

#include "data.hpp"
#include "model.hpp"

namespace nspod {

struct LossBreakdown {
    double total = 0.0;
    double reconstruction = 0.0;  // squared Frobenius misfit
    double regularization = 0.0;  // lambda-weighted nuclear-norm sum
    double lambda = 0.0;
};

struct LossEvaluation {
    LossBreakdown breakdown;
    std::vector<Matrix> unshifted;    // Q^k, network on the plain grid
    std::vector<Matrix> transformed;  // T^k Q^k, network at shifted coordinates
};

/// Objective over the full grid: ||Q - sum_k T^k Q^k||_F^2 + lambda * sum_k
/// ||Q^k||_*. Both field matrices come from continuous network evaluation;
/// nothing is interpolated. Throws Error(numeric) naming (k, m, n) if a
/// network output is non-finite.
LossEvaluation evaluate_loss(const SnapshotMatrix& q, const ShapeModel& shape,
                             const ShiftModel& shift, double lambda, int threads = 1);

struct LossGradient {
    ModelGradients grads;
    LossBreakdown breakdown;
    std::vector<Matrix> unshifted;
    std::vector<Matrix> transformed;
};

/// Reusable buffers for repeated gradient evaluations (one per training run).
class LossWorkspace {
public:
    std::vector<ModelGradients> chunk_grads;
    std::vector<SampleWorkspace> worker_ws;
    std::vector<double> up_shifted, up_unshifted;
};

/// Full-batch subgradient of the objective. The reconstruction term seeds
/// -2 * residual into each shifted output; the nuclear term seeds
/// lambda * (U_k V_k^T) into each unshifted output. Contributions are
/// accumulated over samples in grid-index order (column-major, fixed chunk
/// partition), so results are bitwise independent of the thread count.
LossGradient loss_gradient(const SnapshotMatrix& q, const ShapeModel& shape,
                           const ShiftModel& shift, double lambda, double rank_tol = 1e-7,
                           int threads = 1, LossWorkspace* ws = nullptr);

}  // namespace nspod
