#include "checkpoint.hpp"

#include <fstream>

#include "data.hpp"

namespace nspod {

namespace {

constexpr const char* kMagic = "NSPODCKPT";

void write_mlp(std::ostream& os, const MlpParams& mlp) {
    os << "layers " << mlp.layers.size() << "\n";
    for (const MlpLayer& lay : mlp.layers) {
        os << "layer " << lay.weight.rows() << " " << lay.weight.cols() << "\n";
        for (std::size_t i = 0; i < lay.weight.rows(); ++i) {
            for (std::size_t j = 0; j < lay.weight.cols(); ++j) {
                if (j) os << " ";
                os << format_double(lay.weight(i, j));
            }
            os << "\n";
        }
        for (std::size_t i = 0; i < lay.bias.size(); ++i) {
            if (i) os << " ";
            os << format_double(lay.bias[i]);
        }
        os << "\n";
    }
}

class TokenReader {
public:
    TokenReader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}

    std::string next(const char* what) {
        std::string tok;
        if (!(is_ >> tok))
            fail(ErrorCode::parse, path_ + ": truncated checkpoint, expected " + std::string(what));
        return tok;
    }

    void expect(const char* literal) {
        const std::string tok = next(literal);
        if (tok != literal)
            fail(ErrorCode::parse, path_ + ": expected '" + literal + "', got '" + tok + "'");
    }

    double number(const char* what) { return parse_double(next(what), path_ + ": " + what); }

    std::size_t count(const char* what) {
        const double v = number(what);
        if (v < 0 || v != std::size_t(v))
            fail(ErrorCode::parse, path_ + ": " + what + " must be a non-negative integer");
        return std::size_t(v);
    }

private:
    std::istream& is_;
    std::string path_;
};

MlpParams read_mlp(TokenReader& r) {
    r.expect("layers");
    const std::size_t L = r.count("layer count");
    MlpParams mlp;
    for (std::size_t l = 0; l < L; ++l) {
        r.expect("layer");
        const std::size_t out = r.count("layer rows");
        const std::size_t in = r.count("layer cols");
        MlpLayer lay{Matrix(out, in), std::vector<double>(out)};
        for (std::size_t i = 0; i < out; ++i)
            for (std::size_t j = 0; j < in; ++j) lay.weight(i, j) = r.number("weight");
        for (std::size_t i = 0; i < out; ++i) lay.bias[i] = r.number("bias");
        mlp.layers.push_back(std::move(lay));
    }
    mlp.validate();
    return mlp;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    ckpt.shape.validate();
    ckpt.shift.validate();
    if (ckpt.shape.frames() != ckpt.shift.frames())
        fail(ErrorCode::invalid_argument, "save_checkpoint: frame count mismatch");

    std::ofstream os(path);
    if (!os) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    os << kMagic << " 1\n";
    os << "seed " << ckpt.seed << "\n";
    os << "frames " << ckpt.shape.frames() << "\n";
    os << "norm_x " << format_double(ckpt.shape.norm.x.scale) << " "
       << format_double(ckpt.shape.norm.x.offset) << "\n";
    os << "norm_t " << format_double(ckpt.shape.norm.t.scale) << " "
       << format_double(ckpt.shape.norm.t.offset) << "\n";
    os << "shift_time_norm " << (ckpt.shift.normalize_time ? 1 : 0) << " "
       << format_double(ckpt.shift.t_norm.scale) << " " << format_double(ckpt.shift.t_norm.offset)
       << "\n";
    for (std::size_t k = 0; k < ckpt.shape.frames(); ++k) {
        os << "shape_block " << k << "\n";
        write_mlp(os, ckpt.shape.blocks[k]);
    }
    for (std::size_t k = 0; k < ckpt.shift.frames(); ++k) {
        const ShiftHead& h = ckpt.shift.blocks[k];
        if (h.kind == ShiftHead::Kind::polynomial) {
            os << "shift_block " << k << " poly " << h.poly.degree() << " "
               << format_double(h.poly.time_scale) << "\n";
            for (std::size_t j = 0; j < h.poly.coeffs.size(); ++j) {
                if (j) os << " ";
                os << format_double(h.poly.coeffs[j]);
            }
            os << "\n";
        } else {
            os << "shift_block " << k << " mlp\n";
            write_mlp(os, h.mlp);
        }
    }
    os << "end\n";
    if (!os) fail(ErrorCode::io, "write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::io, "cannot open '" + path + "' for reading");
    TokenReader r(is, path);

    r.expect(kMagic);
    if (r.count("version") != 1)
        fail(ErrorCode::parse, path + ": unsupported checkpoint version");
    Checkpoint ckpt;
    r.expect("seed");
    ckpt.seed = std::uint64_t(r.count("seed"));
    r.expect("frames");
    const std::size_t K = r.count("frames");
    if (K == 0) fail(ErrorCode::parse, path + ": frames must be >= 1");

    r.expect("norm_x");
    ckpt.shape.norm.x.scale = r.number("norm_x scale");
    ckpt.shape.norm.x.offset = r.number("norm_x offset");
    r.expect("norm_t");
    ckpt.shape.norm.t.scale = r.number("norm_t scale");
    ckpt.shape.norm.t.offset = r.number("norm_t offset");
    r.expect("shift_time_norm");
    ckpt.shift.normalize_time = r.count("shift_time_norm flag") != 0;
    ckpt.shift.t_norm.scale = r.number("shift t scale");
    ckpt.shift.t_norm.offset = r.number("shift t offset");

    for (std::size_t k = 0; k < K; ++k) {
        r.expect("shape_block");
        if (r.count("shape block index") != k)
            fail(ErrorCode::parse, path + ": shape blocks out of order");
        ckpt.shape.blocks.push_back(read_mlp(r));
    }
    for (std::size_t k = 0; k < K; ++k) {
        r.expect("shift_block");
        if (r.count("shift block index") != k)
            fail(ErrorCode::parse, path + ": shift blocks out of order");
        const std::string kind = r.next("shift block kind");
        ShiftHead head;
        if (kind == "poly") {
            head.kind = ShiftHead::Kind::polynomial;
            const std::size_t degree = r.count("degree");
            head.poly.time_scale = r.number("time_scale");
            head.poly.coeffs.resize(degree + 1);
            for (double& c : head.poly.coeffs) c = r.number("coefficient");
        } else if (kind == "mlp") {
            head.kind = ShiftHead::Kind::mlp;
            head.mlp = read_mlp(r);
        } else {
            fail(ErrorCode::parse, path + ": unknown shift block kind '" + kind + "'");
        }
        ckpt.shift.blocks.push_back(std::move(head));
    }
    r.expect("end");
    ckpt.shape.validate();
    ckpt.shift.validate();
    return ckpt;
}

}  // namespace nspod
