#include "loss.hpp"

#include <cmath>
#include <sstream>

#include "parallel.hpp"

namespace nspod {

namespace {

// Samples are ordered column-major (snapshot by snapshot): s = n * M + m.
void forward_fields(const SnapshotMatrix& q, const ShapeModel& shape, const ShiftModel& shift,
                    int threads, std::vector<Matrix>& unshifted, std::vector<Matrix>& transformed,
                    std::vector<SampleWorkspace>& worker_ws) {
    const std::size_t M = q.grid.m, N = q.grid.n, K = shape.frames();
    unshifted.assign(K, Matrix(M, N));
    transformed.assign(K, Matrix(M, N));

    parallel_chunks(M * N, kGradChunkSize, threads,
                    [&](std::size_t, std::size_t begin, std::size_t end, int worker) {
                        SampleWorkspace& ws = worker_ws[worker];
                        for (std::size_t s = begin; s < end; ++s) {
                            const std::size_t n = s / M, m = s % M;
                            forward_pass_cached(shape, shift, q.grid.x(m), q.grid.t(n), ws);
                            for (std::size_t k = 0; k < K; ++k) {
                                unshifted[k](m, n) = ws.q_unshifted[k];
                                transformed[k](m, n) = ws.q_shifted[k];
                            }
                        }
                    });

    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t m = 0; m < M; ++m) {
                if (!std::isfinite(transformed[k](m, n)) || !std::isfinite(unshifted[k](m, n))) {
                    std::ostringstream os;
                    os << "loss: non-finite network output at frame k=" << k << ", m=" << m
                       << ", n=" << n;
                    fail(ErrorCode::numeric, os.str());
                }
            }
    }
}

Matrix residual_matrix(const SnapshotMatrix& q, const std::vector<Matrix>& transformed) {
    Matrix r = q.values;
    for (const Matrix& tq : transformed)
        for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] -= tq.data()[i];
    return r;
}

int worker_count(std::size_t samples, int threads) {
    const std::size_t n_chunks = (samples + kGradChunkSize - 1) / kGradChunkSize;
    return int(std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n_chunks, 1)));
}

}  // namespace

LossEvaluation evaluate_loss(const SnapshotMatrix& q, const ShapeModel& shape,
                             const ShiftModel& shift, double lambda, int threads) {
    if (!(lambda >= 0.0)) fail(ErrorCode::invalid_argument, "evaluate_loss: lambda must be >= 0");
    q.validate();
    shape.validate();
    shift.validate();
    if (shape.frames() != shift.frames())
        fail(ErrorCode::invalid_argument, "evaluate_loss: shape and shift frame counts differ");

    LossEvaluation out;
    std::vector<SampleWorkspace> ws(worker_count(q.grid.m * q.grid.n, threads));
    for (auto& w : ws) w.prepare(shape, shift);
    forward_fields(q, shape, shift, threads, out.unshifted, out.transformed, ws);

    const Matrix r = residual_matrix(q, out.transformed);
    out.breakdown.lambda = lambda;
    out.breakdown.reconstruction = frobenius_norm_sq(r);
    out.breakdown.regularization = 0.0;
    if (lambda > 0.0) {
        for (const Matrix& f : out.unshifted)
            out.breakdown.regularization += lambda * nuclear_norm(f);
    }
    out.breakdown.total = out.breakdown.reconstruction + out.breakdown.regularization;
    return out;
}

LossGradient loss_gradient(const SnapshotMatrix& q, const ShapeModel& shape,
                           const ShiftModel& shift, double lambda, double rank_tol, int threads,
                           LossWorkspace* ws) {
    if (!(lambda >= 0.0)) fail(ErrorCode::invalid_argument, "loss_gradient: lambda must be >= 0");
    q.validate();
    shape.validate();
    shift.validate();
    if (shape.frames() != shift.frames())
        fail(ErrorCode::invalid_argument, "loss_gradient: shape and shift frame counts differ");

    const std::size_t M = q.grid.m, N = q.grid.n, K = shape.frames();
    const std::size_t samples = M * N;
    const std::size_t n_chunks = (samples + kGradChunkSize - 1) / kGradChunkSize;

    LossWorkspace local;
    if (!ws) ws = &local;
    const int workers = worker_count(samples, threads);
    if (ws->worker_ws.size() < std::size_t(workers)) ws->worker_ws.resize(workers);
    for (auto& w : ws->worker_ws) w.prepare(shape, shift);
    while (ws->chunk_grads.size() < n_chunks)
        ws->chunk_grads.push_back(ModelGradients::zeros_like(shape, shift));

    LossGradient out;
    forward_fields(q, shape, shift, threads, out.unshifted, out.transformed, ws->worker_ws);

    const Matrix r = residual_matrix(q, out.transformed);
    out.breakdown.lambda = lambda;
    out.breakdown.reconstruction = frobenius_norm_sq(r);
    out.breakdown.regularization = 0.0;

    // Per-frame seed for the nuclear term, already scaled by lambda.
    std::vector<Matrix> nuclear_seed;
    nuclear_seed.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        if (lambda > 0.0) {
            out.breakdown.regularization += lambda * nuclear_norm(out.unshifted[k]);
            nuclear_seed.push_back(lambda * nuclear_subgradient(out.unshifted[k], rank_tol));
        } else {
            nuclear_seed.push_back(Matrix(M, N));
        }
    }
    out.breakdown.total = out.breakdown.reconstruction + out.breakdown.regularization;

    parallel_chunks(samples, kGradChunkSize, threads,
                    [&](std::size_t ci, std::size_t begin, std::size_t end, int worker) {
                        SampleWorkspace& sw = ws->worker_ws[worker];
                        ModelGradients& acc = ws->chunk_grads[ci];
                        acc.set_zero();
                        std::vector<double> up_sh(K), up_un(K);
                        for (std::size_t s = begin; s < end; ++s) {
                            const std::size_t n = s / M, m = s % M;
                            forward_pass_cached(shape, shift, q.grid.x(m), q.grid.t(n), sw);
                            const double seed_sh = -2.0 * r(m, n);
                            for (std::size_t k = 0; k < K; ++k) {
                                up_sh[k] = seed_sh;
                                up_un[k] = nuclear_seed[k](m, n);
                            }
                            backward_pass(shape, shift, sw, up_sh.data(), up_un.data(), acc);
                        }
                    });

    out.grads = ModelGradients::zeros_like(shape, shift);
    for (std::size_t ci = 0; ci < n_chunks; ++ci) out.grads.add(ws->chunk_grads[ci]);
    return out;
}

}  // namespace nspod
