#pragma once

#include <cstdint>
#include <functional>
#include <limits>

#include "loss.hpp"

namespace nspod {

struct AdamParams {
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators per parameter block.
struct AdamState {
    AdamParams hyper;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::uint64_t step_count = 0;

    static AdamState init(const std::vector<BlockRef>& params, const AdamParams& hyper);
};

/// Bias-corrected Adam update in place. Throws Error(numeric) naming the
/// parameter block if a gradient entry is non-finite.
void adam_step(std::vector<BlockRef>& params, const std::vector<BlockRef>& grads, AdamState& state);

struct StopCheck {
    bool stop = false;
    int new_streak = 0;
};

/// Relative-decrease stopping rule: the epoch criterion is
/// (loss_prev - loss_curr) <= delta * loss_prev, plus a no-increase guard
/// unless `literal` is set. stop fires once the criterion holds for
/// `patience` consecutive epochs. Non-finite losses raise Error(diverged).
StopCheck should_stop(double loss_prev, double loss_curr, double delta, int streak, int patience,
                      bool literal = false);

struct TrainingConfig {
    std::size_t frames = 1;  // K
    double lambda = 0.05;
    double alpha = 0.001;
    std::size_t max_epochs = 1000;
    double delta = 1e-4;  // stopping tolerance
    int patience = 50;
    bool literal_stop = false;
    std::uint64_t seed = 0;
    ShapeArch shape_arch;
    ShiftArch shift_arch;
    double rank_tol = 1e-7;
    int threads = 1;
    bool freeze_shift = false;
    std::size_t checkpoint_every = 1000;  // 0 disables periodic checkpoints

    void validate() const;
};

enum class StopReason { criterion_met, max_epochs, divergence };
const char* to_string(StopReason r);

struct TrainingTrace {
    struct Entry {
        std::size_t epoch = 0;  // 1-based
        LossBreakdown loss;     // at the parameters entering this epoch
        double wall_ms = 0.0;
    };
    std::vector<Entry> history;
    StopReason stop_reason = StopReason::max_epochs;
    std::size_t best_epoch = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    double wall_time_ms = 0.0;
};

struct TrainResult {
    ShapeModel shape;  // best-loss parameters seen
    ShiftModel shift;
    ShapeModel shape_last;  // parameters after the final update (last finite on divergence)
    ShiftModel shift_last;
    TrainingTrace trace;
};

using CheckpointSink =
    std::function<void(std::size_t epoch, const ShapeModel&, const ShiftModel&, const TrainingTrace&)>;

/// Joint full-batch training of both models. Optional warm starts replace the
/// seeded initialization of the corresponding model.
TrainResult train(const SnapshotMatrix& q, const TrainingConfig& config,
                  const ShapeModel* warm_shape = nullptr, const ShiftModel* warm_shift = nullptr,
                  const CheckpointSink& checkpoint = nullptr);

/// Trace export: epoch,total,reconstruction,regularization,wall_time_ms
void save_trace_csv(const std::string& path, const TrainingTrace& trace);

}  // namespace nspod
