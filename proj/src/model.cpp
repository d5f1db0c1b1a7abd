#include "model.hpp"

#include <algorithm>
#include <cmath>

namespace nspod {

namespace {

const double kInitHalfWidth = 1.0 / std::sqrt(2.0);

void validate_mlp(const MlpParams& mlp, const char* what) {
    if (mlp.layers.empty())
        fail(ErrorCode::invalid_argument, std::string(what) + ": empty layer list");
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        const MlpLayer& lay = mlp.layers[l];
        if (lay.weight.rows() == 0 || lay.weight.cols() == 0 ||
            lay.bias.size() != lay.weight.rows())
            fail(ErrorCode::invalid_argument, std::string(what) + ": inconsistent layer shapes");
        if (l > 0 && mlp.layers[l - 1].weight.rows() != lay.weight.cols())
            fail(ErrorCode::invalid_argument, std::string(what) + ": layer widths do not chain");
        if (!lay.weight.all_finite())
            fail(ErrorCode::invalid_argument, std::string(what) + ": non-finite weights");
        for (double b : lay.bias)
            if (!std::isfinite(b))
                fail(ErrorCode::invalid_argument, std::string(what) + ": non-finite bias");
    }
}

}  // namespace

void MlpParams::validate() const { validate_mlp(*this, "MlpParams"); }

InputNormalization InputNormalization::from_extents(double x_min, double x_max, double t_min,
                                                    double t_max) {
    InputNormalization n;
    n.x.scale = 2.0 / (x_max - x_min);
    n.x.offset = -1.0 - n.x.scale * x_min;
    n.t.scale = 2.0 / (t_max - t_min);
    n.t.offset = -1.0 - n.t.scale * t_min;
    return n;
}

void ShapeModel::validate() const {
    if (blocks.empty())
        fail(ErrorCode::invalid_argument, "ShapeModel: needs at least one block");
    for (const auto& b : blocks) {
        validate_mlp(b, "ShapeModel block");
        if (b.input_width() != 2 || b.output_width() != 1)
            fail(ErrorCode::invalid_argument, "ShapeModel block must map R^2 -> R");
    }
}

double PolynomialHead::eval(double t) const {
    const double u = t / time_scale;
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * u + coeffs[j];
    return acc;
}

std::vector<double> PolynomialHead::raw_coefficients() const {
    std::vector<double> raw(coeffs.size());
    double denom = 1.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        raw[j] = coeffs[j] / denom;
        denom *= time_scale;
    }
    return raw;
}

void ShiftModel::validate() const {
    if (blocks.empty())
        fail(ErrorCode::invalid_argument, "ShiftModel: needs at least one block");
    for (const auto& b : blocks) {
        if (b.kind == ShiftHead::Kind::polynomial) {
            if (b.poly.coeffs.empty())
                fail(ErrorCode::invalid_argument, "ShiftModel: polynomial head with no coefficients");
            if (!(b.poly.time_scale > 0.0))
                fail(ErrorCode::invalid_argument, "ShiftModel: time_scale must be positive");
            for (double c : b.poly.coeffs)
                if (!std::isfinite(c))
                    fail(ErrorCode::invalid_argument, "ShiftModel: non-finite coefficient");
        } else {
            validate_mlp(b.mlp, "ShiftModel block");
            if (b.mlp.input_width() != 1 || b.mlp.output_width() != 1)
                fail(ErrorCode::invalid_argument, "ShiftModel mlp block must map R -> R");
        }
    }
}

ModelGradients ModelGradients::zeros_like(const ShapeModel& shape, const ShiftModel& shift) {
    ModelGradients g;
    g.shape.resize(shape.blocks.size());
    for (std::size_t k = 0; k < shape.blocks.size(); ++k) {
        for (const MlpLayer& lay : shape.blocks[k].layers)
            g.shape[k].layers.push_back(
                {Matrix(lay.weight.rows(), lay.weight.cols()), std::vector<double>(lay.bias.size(), 0.0)});
    }
    g.shift.resize(shift.blocks.size());
    for (std::size_t k = 0; k < shift.blocks.size(); ++k) {
        const ShiftHead& h = shift.blocks[k];
        if (h.kind == ShiftHead::Kind::polynomial) {
            g.shift[k].poly.assign(h.poly.coeffs.size(), 0.0);
        } else {
            for (const MlpLayer& lay : h.mlp.layers)
                g.shift[k].mlp.layers.push_back(
                    {Matrix(lay.weight.rows(), lay.weight.cols()), std::vector<double>(lay.bias.size(), 0.0)});
        }
    }
    return g;
}

void ModelGradients::set_zero() {
    for (auto& b : shape)
        for (auto& lay : b.layers) {
            std::fill(lay.weight.data(), lay.weight.data() + lay.weight.size(), 0.0);
            std::fill(lay.bias.begin(), lay.bias.end(), 0.0);
        }
    for (auto& h : shift) {
        std::fill(h.poly.begin(), h.poly.end(), 0.0);
        for (auto& lay : h.mlp.layers) {
            std::fill(lay.weight.data(), lay.weight.data() + lay.weight.size(), 0.0);
            std::fill(lay.bias.begin(), lay.bias.end(), 0.0);
        }
    }
}

void ModelGradients::add(const ModelGradients& other) {
    for (std::size_t k = 0; k < shape.size(); ++k)
        for (std::size_t l = 0; l < shape[k].layers.size(); ++l) {
            MlpLayer& dst = shape[k].layers[l];
            const MlpLayer& src = other.shape[k].layers[l];
            for (std::size_t i = 0; i < dst.weight.size(); ++i) dst.weight.data()[i] += src.weight.data()[i];
            for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += src.bias[i];
        }
    for (std::size_t k = 0; k < shift.size(); ++k) {
        for (std::size_t j = 0; j < shift[k].poly.size(); ++j) shift[k].poly[j] += other.shift[k].poly[j];
        for (std::size_t l = 0; l < shift[k].mlp.layers.size(); ++l) {
            MlpLayer& dst = shift[k].mlp.layers[l];
            const MlpLayer& src = other.shift[k].mlp.layers[l];
            for (std::size_t i = 0; i < dst.weight.size(); ++i) dst.weight.data()[i] += src.weight.data()[i];
            for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += src.bias[i];
        }
    }
}

bool ModelGradients::all_finite() const {
    for (const auto& b : shape)
        for (const auto& lay : b.layers) {
            if (!lay.weight.all_finite()) return false;
            for (double v : lay.bias)
                if (!std::isfinite(v)) return false;
        }
    for (const auto& h : shift) {
        for (double v : h.poly)
            if (!std::isfinite(v)) return false;
        for (const auto& lay : h.mlp.layers) {
            if (!lay.weight.all_finite()) return false;
            for (double v : lay.bias)
                if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

namespace {

void collect_mlp_blocks(const std::string& prefix, std::vector<MlpLayer>& layers,
                        std::vector<BlockRef>& out) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        out.push_back({prefix + ".layer" + std::to_string(l) + ".weight",
                       layers[l].weight.data(), layers[l].weight.size()});
        out.push_back({prefix + ".layer" + std::to_string(l) + ".bias",
                       layers[l].bias.data(), layers[l].bias.size()});
    }
}

}  // namespace

std::vector<BlockRef> param_blocks(ShapeModel& shape, ShiftModel& shift) {
    std::vector<BlockRef> out;
    for (std::size_t k = 0; k < shape.blocks.size(); ++k)
        collect_mlp_blocks("shape" + std::to_string(k), shape.blocks[k].layers, out);
    for (std::size_t k = 0; k < shift.blocks.size(); ++k) {
        ShiftHead& h = shift.blocks[k];
        const std::string prefix = "shift" + std::to_string(k);
        if (h.kind == ShiftHead::Kind::polynomial)
            out.push_back({prefix + ".poly", h.poly.coeffs.data(), h.poly.coeffs.size()});
        else
            collect_mlp_blocks(prefix, h.mlp.layers, out);
    }
    return out;
}

std::vector<BlockRef> grad_blocks(ModelGradients& grads) {
    std::vector<BlockRef> out;
    for (std::size_t k = 0; k < grads.shape.size(); ++k)
        collect_mlp_blocks("shape" + std::to_string(k), grads.shape[k].layers, out);
    for (std::size_t k = 0; k < grads.shift.size(); ++k) {
        ShiftHeadGrads& h = grads.shift[k];
        const std::string prefix = "shift" + std::to_string(k);
        if (!h.poly.empty())
            out.push_back({prefix + ".poly", h.poly.data(), h.poly.size()});
        else
            collect_mlp_blocks(prefix, h.mlp.layers, out);
    }
    return out;
}

std::size_t parameter_count(const ShapeModel& shape, const ShiftModel& shift) {
    std::size_t n = 0;
    auto& s = const_cast<ShapeModel&>(shape);
    auto& d = const_cast<ShiftModel&>(shift);
    for (const BlockRef& b : param_blocks(s, d)) n += b.n;
    return n;
}

MlpParams init_mlp(const std::vector<std::size_t>& widths, Rng& rng) {
    if (widths.size() < 2)
        fail(ErrorCode::invalid_argument, "init_mlp: need at least input and output widths");
    MlpParams mlp;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        MlpLayer lay{Matrix(widths[l + 1], widths[l]), std::vector<double>(widths[l + 1])};
        for (std::size_t i = 0; i < lay.weight.size(); ++i)
            lay.weight.data()[i] = rng.uniform(-kInitHalfWidth, kInitHalfWidth);
        for (double& b : lay.bias) b = rng.uniform(-kInitHalfWidth, kInitHalfWidth);
        mlp.layers.push_back(std::move(lay));
    }
    return mlp;
}

ShapeModel init_shape_model(std::size_t frames, const ShapeArch& arch,
                            const InputNormalization& norm, Rng& rng) {
    ShapeModel model;
    model.norm = norm;
    std::vector<std::size_t> widths;
    widths.push_back(2);
    widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
    widths.push_back(1);
    for (std::size_t k = 0; k < frames; ++k) model.blocks.push_back(init_mlp(widths, rng));
    model.validate();
    return model;
}

ShiftModel init_shift_model(std::size_t frames, const ShiftArch& arch, const AffineMap1D& t_norm,
                            Rng& rng) {
    ShiftModel model;
    model.normalize_time = arch.normalize_time;
    model.t_norm = t_norm;
    for (std::size_t k = 0; k < frames; ++k) {
        ShiftHead head;
        head.kind = arch.kind;
        if (arch.kind == ShiftHead::Kind::polynomial) {
            if (arch.poly_degrees.size() != frames)
                fail(ErrorCode::invalid_argument,
                     "init_shift_model: need one polynomial degree per frame");
            head.poly.time_scale = arch.poly_time_scale;
            head.poly.coeffs.resize(arch.poly_degrees[k] + 1);
            for (double& c : head.poly.coeffs) c = rng.uniform(-kInitHalfWidth, kInitHalfWidth);
        } else {
            std::vector<std::size_t> widths;
            widths.push_back(1);
            widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
            widths.push_back(1);
            head.mlp = init_mlp(widths, rng);
        }
        model.blocks.push_back(std::move(head));
    }
    model.validate();
    return model;
}

namespace {

double mlp_forward_cached(const MlpParams& mlp, const double* in,
                          SampleWorkspace::MlpCache& cache) {
    const std::size_t L = mlp.layers.size();
    cache.input[0].assign(in, in + mlp.input_width());
    for (std::size_t l = 0; l < L; ++l) {
        const MlpLayer& lay = mlp.layers[l];
        const std::size_t out = lay.weight.rows(), width = lay.weight.cols();
        const double* a = cache.input[l].data();
        std::vector<double>& z = cache.pre[l];
        for (std::size_t i = 0; i < out; ++i)
            z[i] = dot(lay.weight.row(i), a, width) + lay.bias[i];
        if (l + 1 < L) {
            std::vector<double>& an = cache.input[l + 1];
            for (std::size_t i = 0; i < out; ++i) an[i] = elu(z[i]);
        }
    }
    return cache.pre[L - 1][0];
}

/// Accumulates parameter gradients for `upstream` at the cached activations;
/// optionally also produces the gradient with respect to the input vector.
void mlp_backward(const MlpParams& mlp, const SampleWorkspace::MlpCache& cache, double upstream,
                  MlpParams& grads, double* dinput, std::vector<double>& dz,
                  std::vector<double>& da) {
    const std::size_t L = mlp.layers.size();
    dz.assign(1, upstream);
    for (std::size_t l = L; l-- > 0;) {
        const MlpLayer& lay = mlp.layers[l];
        MlpLayer& g = grads.layers[l];
        const std::size_t out = lay.weight.rows(), width = lay.weight.cols();
        const double* a = cache.input[l].data();
        for (std::size_t i = 0; i < out; ++i) {
            const double d = dz[i];
            g.bias[i] += d;
            double* grow = g.weight.row(i);
            for (std::size_t j = 0; j < width; ++j) grow[j] += d * a[j];
        }
        if (l == 0 && dinput == nullptr) return;
        da.assign(width, 0.0);
        for (std::size_t i = 0; i < out; ++i) {
            const double d = dz[i];
            const double* wrow = lay.weight.row(i);
            for (std::size_t j = 0; j < width; ++j) da[j] += d * wrow[j];
        }
        if (l == 0) {
            std::copy(da.begin(), da.end(), dinput);
            return;
        }
        const std::vector<double>& z_prev = cache.pre[l - 1];
        dz.assign(width, 0.0);
        for (std::size_t j = 0; j < width; ++j) dz[j] = da[j] * elu_prime(z_prev[j]);
    }
}

void prepare_cache(const MlpParams& mlp, SampleWorkspace::MlpCache& cache) {
    const std::size_t L = mlp.layers.size();
    cache.input.resize(L);
    cache.pre.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        cache.input[l].resize(mlp.layers[l].weight.cols());
        cache.pre[l].resize(mlp.layers[l].weight.rows());
    }
}

}  // namespace

double mlp_forward(const MlpParams& mlp, const double* in) {
    SampleWorkspace::MlpCache cache;
    prepare_cache(mlp, cache);
    return mlp_forward_cached(mlp, in, cache);
}

std::vector<double> shape_forward(const ShapeModel& model, double x, double t) {
    std::vector<double> out(model.frames());
    const double in[2] = {model.norm.x(x), model.norm.t(t)};
    for (std::size_t k = 0; k < model.frames(); ++k)
        out[k] = mlp_forward(model.blocks[k], in);
    return out;
}

std::vector<double> shift_forward(const ShiftModel& model, double t) {
    std::vector<double> out(model.frames());
    for (std::size_t k = 0; k < model.frames(); ++k) {
        const ShiftHead& h = model.blocks[k];
        if (h.kind == ShiftHead::Kind::polynomial) {
            out[k] = h.poly.eval(t);
        } else {
            const double tin = model.normalize_time ? model.t_norm(t) : t;
            out[k] = mlp_forward(h.mlp, &tin);
        }
    }
    return out;
}

void SampleWorkspace::prepare(const ShapeModel& shape, const ShiftModel& shift) {
    const std::size_t K = shape.frames();
    shifts.resize(K);
    q_unshifted.resize(K);
    q_shifted.resize(K);
    shape_unshifted.resize(K);
    shape_shifted.resize(K);
    shift_mlp.resize(K);
    std::size_t max_width = 2;
    for (std::size_t k = 0; k < K; ++k) {
        prepare_cache(shape.blocks[k], shape_unshifted[k]);
        prepare_cache(shape.blocks[k], shape_shifted[k]);
        if (shift.blocks[k].kind == ShiftHead::Kind::mlp)
            prepare_cache(shift.blocks[k].mlp, shift_mlp[k]);
        for (const MlpLayer& lay : shape.blocks[k].layers)
            max_width = std::max(max_width, lay.weight.rows());
        for (const MlpLayer& lay : shift.blocks[k].mlp.layers)
            max_width = std::max(max_width, lay.weight.rows());
    }
    dz.reserve(max_width);
    da.reserve(max_width);
}

ForwardResult forward_pass_cached(const ShapeModel& shape, const ShiftModel& shift, double x,
                                  double t, SampleWorkspace& ws) {
    const std::size_t K = shape.frames();
    ws.x = x;
    ws.t = t;
    for (std::size_t k = 0; k < K; ++k) {
        const ShiftHead& h = shift.blocks[k];
        if (h.kind == ShiftHead::Kind::polynomial) {
            ws.shifts[k] = h.poly.eval(t);
        } else {
            const double tin = shift.normalize_time ? shift.t_norm(t) : t;
            ws.shifts[k] = mlp_forward_cached(h.mlp, &tin, ws.shift_mlp[k]);
        }
    }
    const double tn = shape.norm.t(t);
    for (std::size_t k = 0; k < K; ++k) {
        const double in_un[2] = {shape.norm.x(x), tn};
        ws.q_unshifted[k] = mlp_forward_cached(shape.blocks[k], in_un, ws.shape_unshifted[k]);
        const double in_sh[2] = {shape.norm.x(x + ws.shifts[k]), tn};
        ws.q_shifted[k] = mlp_forward_cached(shape.blocks[k], in_sh, ws.shape_shifted[k]);
    }
    return {ws.q_unshifted, ws.q_shifted, ws.shifts};
}

ForwardResult forward_pass(const ShapeModel& shape, const ShiftModel& shift, double x, double t) {
    SampleWorkspace ws;
    ws.prepare(shape, shift);
    return forward_pass_cached(shape, shift, x, t, ws);
}

void backward_pass(const ShapeModel& shape, const ShiftModel& shift, SampleWorkspace& ws,
                   const double* upstream_shifted, const double* upstream_unshifted,
                   ModelGradients& out) {
    const std::size_t K = shape.frames();
    double dinput[2];
    for (std::size_t k = 0; k < K; ++k) {
        if (upstream_unshifted[k] != 0.0)
            mlp_backward(shape.blocks[k], ws.shape_unshifted[k], upstream_unshifted[k],
                         out.shape[k], nullptr, ws.dz, ws.da);
        if (upstream_shifted[k] == 0.0) continue;
        mlp_backward(shape.blocks[k], ws.shape_shifted[k], upstream_shifted[k], out.shape[k],
                     dinput, ws.dz, ws.da);
        // Chain through the shifted coordinate: d(q^k)/d(delta) at the
        // shifted point, in raw units.
        const double ddelta = dinput[0] * shape.norm.x.scale;
        const ShiftHead& h = shift.blocks[k];
        if (h.kind == ShiftHead::Kind::polynomial) {
            const double u = ws.t / h.poly.time_scale;
            double pw = 1.0;
            std::vector<double>& g = out.shift[k].poly;
            for (std::size_t j = 0; j < g.size(); ++j) {
                g[j] += ddelta * pw;
                pw *= u;
            }
        } else {
            mlp_backward(h.mlp, ws.shift_mlp[k], ddelta, out.shift[k].mlp, nullptr, ws.dz, ws.da);
        }
    }
}

}  // namespace nspod
