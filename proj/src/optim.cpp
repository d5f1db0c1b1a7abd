#include "optim.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "data.hpp"

namespace nspod {

AdamState AdamState::init(const std::vector<BlockRef>& params, const AdamParams& hyper) {
    AdamState st;
    st.hyper = hyper;
    for (const BlockRef& b : params) {
        st.first_moment.emplace_back(b.n, 0.0);
        st.second_moment.emplace_back(b.n, 0.0);
    }
    return st;
}

void adam_step(std::vector<BlockRef>& params, const std::vector<BlockRef>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        fail(ErrorCode::invalid_argument, "adam_step: block count mismatch");
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].n != grads[b].n || params[b].n != state.first_moment[b].size())
            fail(ErrorCode::invalid_argument,
                 "adam_step: block size mismatch in '" + params[b].name + "'");
        for (std::size_t i = 0; i < grads[b].n; ++i)
            if (!std::isfinite(grads[b].data[i]))
                fail(ErrorCode::numeric,
                     "adam_step: non-finite gradient in block '" + grads[b].name + "'");
    }

    const AdamParams& h = state.hyper;
    state.step_count += 1;
    const double bias1 = 1.0 - std::pow(h.beta1, double(state.step_count));
    const double bias2 = 1.0 - std::pow(h.beta2, double(state.step_count));
    for (std::size_t b = 0; b < params.size(); ++b) {
        double* theta = params[b].data;
        const double* g = grads[b].data;
        double* m = state.first_moment[b].data();
        double* v = state.second_moment[b].data();
        for (std::size_t i = 0; i < params[b].n; ++i) {
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            theta[i] -= h.alpha * m_hat / (std::sqrt(v_hat) + h.epsilon);
        }
    }
}

StopCheck should_stop(double loss_prev, double loss_curr, double delta, int streak, int patience,
                      bool literal) {
    if (!std::isfinite(loss_prev) || !std::isfinite(loss_curr))
        fail(ErrorCode::diverged, "should_stop: non-finite loss");
    if (!(delta > 0.0)) fail(ErrorCode::invalid_argument, "should_stop: delta must be > 0");
    if (patience < 1) fail(ErrorCode::invalid_argument, "should_stop: patience must be >= 1");

    bool criterion = (loss_prev - loss_curr) <= delta * loss_prev;
    if (!literal) criterion = criterion && loss_curr <= loss_prev;

    StopCheck out;
    out.new_streak = criterion ? streak + 1 : 0;
    out.stop = out.new_streak >= patience;
    return out;
}

void TrainingConfig::validate() const {
    if (frames < 1) fail(ErrorCode::invalid_argument, "TrainingConfig: frames must be >= 1");
    if (!(lambda >= 0.0)) fail(ErrorCode::invalid_argument, "TrainingConfig: lambda must be >= 0");
    if (!(alpha > 0.0)) fail(ErrorCode::invalid_argument, "TrainingConfig: alpha must be > 0");
    if (!(delta > 0.0)) fail(ErrorCode::invalid_argument, "TrainingConfig: delta must be > 0");
    if (patience < 1) fail(ErrorCode::invalid_argument, "TrainingConfig: patience must be >= 1");
    if (!(rank_tol > 0.0 && rank_tol < 1.0))
        fail(ErrorCode::invalid_argument, "TrainingConfig: rank_tol must be in (0,1)");
    if (shift_arch.kind == ShiftHead::Kind::polynomial && shift_arch.poly_degrees.size() != frames)
        fail(ErrorCode::invalid_argument,
             "TrainingConfig: need one shift polynomial degree per frame");
}

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::criterion_met: return "criterion_met";
        case StopReason::max_epochs: return "max_epochs";
        case StopReason::divergence: return "divergence";
    }
    return "unknown";
}

TrainResult train(const SnapshotMatrix& q, const TrainingConfig& config,
                  const ShapeModel* warm_shape, const ShiftModel* warm_shift,
                  const CheckpointSink& checkpoint) {
    config.validate();
    q.validate();

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed_ms = [&t0] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    Rng rng(config.seed);
    const InputNormalization norm = InputNormalization::from_extents(
        q.grid.x_min, q.grid.x_max, q.grid.t_min, q.grid.t_max);

    TrainResult res;
    res.shape_last = warm_shape ? *warm_shape
                                : init_shape_model(config.frames, config.shape_arch, norm, rng);
    res.shift_last = warm_shift
                         ? *warm_shift
                         : init_shift_model(config.frames, config.shift_arch, norm.t, rng);
    if (res.shape_last.frames() != config.frames || res.shift_last.frames() != config.frames)
        fail(ErrorCode::invalid_argument, "train: warm-start model frame count mismatch");

    res.shape = res.shape_last;
    res.shift = res.shift_last;

    std::vector<BlockRef> params = param_blocks(res.shape_last, res.shift_last);
    if (config.freeze_shift) {
        std::erase_if(params, [](const BlockRef& b) { return b.name.starts_with("shift"); });
    }
    AdamParams hyper;
    hyper.alpha = config.alpha;
    AdamState adam = AdamState::init(params, hyper);

    LossWorkspace loss_ws;
    ShapeModel prev_shape = res.shape_last;
    ShiftModel prev_shift = res.shift_last;
    int streak = 0;
    double prev_loss = 0.0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        LossGradient lg = loss_gradient(q, res.shape_last, res.shift_last, config.lambda,
                                        config.rank_tol, config.threads, &loss_ws);
        const double loss = lg.breakdown.total;
        if (!std::isfinite(loss)) {
            res.trace.stop_reason = StopReason::divergence;
            res.shape_last = prev_shape;
            res.shift_last = prev_shift;
            break;
        }
        res.trace.history.push_back({epoch, lg.breakdown, elapsed_ms()});
        if (loss < res.trace.best_loss) {
            res.trace.best_loss = loss;
            res.trace.best_epoch = epoch;
            res.shape = res.shape_last;
            res.shift = res.shift_last;
        }
        if (epoch > 1) {
            StopCheck sc =
                should_stop(prev_loss, loss, config.delta, streak, config.patience, config.literal_stop);
            streak = sc.new_streak;
            if (sc.stop) {
                res.trace.stop_reason = StopReason::criterion_met;
                break;
            }
        }
        prev_loss = loss;
        prev_shape = res.shape_last;
        prev_shift = res.shift_last;

        std::vector<BlockRef> grads = grad_blocks(lg.grads);
        if (config.freeze_shift)
            std::erase_if(grads, [](const BlockRef& b) { return b.name.starts_with("shift"); });
        adam_step(params, grads, adam);

        if (checkpoint && config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0)
            checkpoint(epoch, res.shape_last, res.shift_last, res.trace);
    }
    res.trace.wall_time_ms = elapsed_ms();
    return res;
}

void save_trace_csv(const std::string& path, const TrainingTrace& trace) {
    std::ofstream os(path);
    if (!os) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    os << "epoch,total,reconstruction,regularization,wall_time_ms\n";
    for (const auto& e : trace.history)
        os << e.epoch << "," << format_double(e.loss.total) << ","
           << format_double(e.loss.reconstruction) << "," << format_double(e.loss.regularization)
           << "," << format_double(e.wall_ms) << "\n";
    if (!os) fail(ErrorCode::io, "write failed for '" + path + "'");
}

}  // namespace nspod
