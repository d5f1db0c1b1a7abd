#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "rng.hpp"

namespace nspod {

inline double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }
inline double elu_prime(double x) { return x >= 0.0 ? 1.0 : std::exp(x); }

struct MlpLayer {
    Matrix weight;             // out x in
    std::vector<double> bias;  // out
};

/// Fully connected net, ELU on every layer except the last (identity output).
struct MlpParams {
    std::vector<MlpLayer> layers;

    std::size_t input_width() const { return layers.front().weight.cols(); }
    std::size_t output_width() const { return layers.back().weight.rows(); }
    void validate() const;
};

struct AffineMap1D {
    double scale = 1.0;
    double offset = 0.0;
    double operator()(double v) const { return scale * v + offset; }
};

/// Affine maps taking raw grid coordinates into [-1,1] for network inputs.
struct InputNormalization {
    AffineMap1D x;
    AffineMap1D t;

    static InputNormalization identity() { return {}; }
    static InputNormalization from_extents(double x_min, double x_max, double t_min, double t_max);
};

/// K coordinate networks, block k maps normalized (x, t) to the co-moving
/// field value of frame k.
struct ShapeModel {
    std::vector<MlpParams> blocks;
    InputNormalization norm;

    std::size_t frames() const { return blocks.size(); }
    void validate() const;
};

/// Polynomial in t evaluated through the scaled basis u = t / time_scale;
/// coeffs are ascending in u. Raw monomial coefficients are coeffs[j] /
/// time_scale^j. time_scale = 1 makes the two bases coincide.
struct PolynomialHead {
    std::vector<double> coeffs;
    double time_scale = 1.0;

    std::size_t degree() const { return coeffs.size() - 1; }
    double eval(double t) const;
    std::vector<double> raw_coefficients() const;
};

struct ShiftHead {
    enum class Kind { polynomial, mlp };
    Kind kind = Kind::polynomial;
    PolynomialHead poly;
    MlpParams mlp;  // 1 -> ... -> 1 when kind == mlp
};

/// K per-frame shift paths t -> delta^k(t).
struct ShiftModel {
    std::vector<ShiftHead> blocks;
    bool normalize_time = false;  // mlp heads consume normalized time when set
    AffineMap1D t_norm;           // used only when normalize_time

    std::size_t frames() const { return blocks.size(); }
    void validate() const;
};

/// Gradient accumulators, shape-congruent with the two models.
struct ShiftHeadGrads {
    std::vector<double> poly;
    MlpParams mlp;
};

struct ModelGradients {
    std::vector<MlpParams> shape;
    std::vector<ShiftHeadGrads> shift;

    static ModelGradients zeros_like(const ShapeModel& shape, const ShiftModel& shift);
    void set_zero();
    void add(const ModelGradients& other);
    bool all_finite() const;
};

/// Named view of one contiguous parameter (or gradient) block. The
/// collection order is the canonical parameter order used everywhere:
/// shape blocks first (per layer: weights then bias), then shift heads.
struct BlockRef {
    std::string name;
    double* data;
    std::size_t n;
};

std::vector<BlockRef> param_blocks(ShapeModel& shape, ShiftModel& shift);
std::vector<BlockRef> grad_blocks(ModelGradients& grads);
std::size_t parameter_count(const ShapeModel& shape, const ShiftModel& shift);

// Architecture descriptors + seeded initialization. All weights and biases
// are drawn i.i.d. uniform on (-1/sqrt(2), 1/sqrt(2)) in canonical order.
struct ShapeArch {
    std::vector<std::size_t> hidden = {64, 64, 64};
};

struct ShiftArch {
    ShiftHead::Kind kind = ShiftHead::Kind::polynomial;
    std::vector<std::size_t> poly_degrees;  // one per frame when polynomial
    double poly_time_scale = 1.0;
    std::vector<std::size_t> hidden = {32, 32, 32};  // when mlp
    bool normalize_time = false;
};

MlpParams init_mlp(const std::vector<std::size_t>& widths, Rng& rng);
ShapeModel init_shape_model(std::size_t frames, const ShapeArch& arch,
                            const InputNormalization& norm, Rng& rng);
ShiftModel init_shift_model(std::size_t frames, const ShiftArch& arch,
                            const AffineMap1D& t_norm, Rng& rng);

// Plain (uncached) evaluation.
double mlp_forward(const MlpParams& mlp, const double* in);
std::vector<double> shape_forward(const ShapeModel& model, double x, double t);
std::vector<double> shift_forward(const ShiftModel& model, double t);

struct ForwardResult {
    std::vector<double> q_unshifted;
    std::vector<double> q_shifted;
    std::vector<double> shifts;
};

ForwardResult forward_pass(const ShapeModel& shape, const ShiftModel& shift, double x, double t);

/// Per-sample activation cache; reusable across samples so the training loop
/// allocates once per worker. Memory is O(depth * width) per instance.
class SampleWorkspace {
public:
    void prepare(const ShapeModel& shape, const ShiftModel& shift);

    // Filled by forward_pass_cached.
    double x = 0.0, t = 0.0;
    std::vector<double> shifts;
    std::vector<double> q_unshifted, q_shifted;

    struct MlpCache {
        std::vector<std::vector<double>> input;  // a_0 .. a_{L-1} (inputs to each layer)
        std::vector<std::vector<double>> pre;    // z_1 .. z_L
    };
    std::vector<MlpCache> shape_unshifted;
    std::vector<MlpCache> shape_shifted;
    std::vector<MlpCache> shift_mlp;

    // scratch reused by backward
    std::vector<double> dz, da;
};

ForwardResult forward_pass_cached(const ShapeModel& shape, const ShiftModel& shift, double x,
                                  double t, SampleWorkspace& ws);

/// Exact reverse-mode gradients for one sample; the upstream vectors hold
/// dL/d q_shifted^k and dL/d q_unshifted^k. Contributions accumulate into
/// `out`. The gradient reaching shift head k is routed through the spatial
/// derivative of shape block k at the shifted input point.
void backward_pass(const ShapeModel& shape, const ShiftModel& shift, SampleWorkspace& ws,
                   const double* upstream_shifted, const double* upstream_unshifted,
                   ModelGradients& out);

}  // namespace nspod
