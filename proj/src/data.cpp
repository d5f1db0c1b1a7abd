#include "data.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace nspod {

void Grid::validate() const {
    if (!(x_max > x_min) || !(t_max > t_min))
        fail(ErrorCode::invalid_argument, "Grid: domain extents must be increasing");
    if (m < 2 || n < 2)
        fail(ErrorCode::invalid_argument, "Grid: need at least 2 points per axis");
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(t_min) || !std::isfinite(t_max))
        fail(ErrorCode::invalid_argument, "Grid: non-finite extents");
}

void SnapshotMatrix::validate() const {
    grid.validate();
    if (values.rows() != grid.m || values.cols() != grid.n)
        fail(ErrorCode::invalid_argument, "SnapshotMatrix: values shape does not match grid");
    if (!values.all_finite())
        fail(ErrorCode::invalid_argument, "SnapshotMatrix: non-finite entries");
}

namespace {

constexpr double kPi = 3.14159265358979323846;

double gaussian(double u, double width) {
    return std::exp(-(u * u) / (width * width));
}

SnapshotMatrix sample_field(const Grid& grid, double (*field)(double, double)) {
    grid.validate();
    SnapshotMatrix snap;
    snap.grid = grid;
    snap.values = Matrix(grid.m, grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) {
        const double t = grid.t(j);
        for (std::size_t i = 0; i < grid.m; ++i)
            snap.values(i, j) = field(grid.x(i), t);
    }
    return snap;
}

}  // namespace

double crossing_waves_shift1(double t) { return 0.15 * t * t * t + 0.8 * t + 1.5; }
double crossing_waves_shift2(double t) { return -18.0 * t + 2.0; }

double crossing_waves_value(double x, double t) {
    const double mu = 200.0, sigma = 4.0;
    return std::sin(kPi * t / 10.0) * gaussian(x - mu - crossing_waves_shift1(t), sigma) +
           std::cos(kPi * t / 10.0) * gaussian(x - mu - crossing_waves_shift2(t), sigma);
}

double pretrain_field_value(double x, double t) {
    const double delta = 4.0, mu1 = 110.0, mu2 = 200.0;
    const double d1 = -7.0 * t + 1.0;
    const double d2 = 6.0 * t - 1.0;
    return gaussian(x - mu1 - d1, delta) + gaussian(x - mu2 - d2, delta);
}

double fire_toy_value(double x, double t) {
    // Two fronts leaving the center plus a short ignition pulse there. Each
    // term is separable in its own co-moving frame, so the toy decomposes
    // into three rank-1 fields.
    const double mu = 125.0, width = 8.0, speed = 0.12;
    const double ramp = 1.0 - std::exp(-t / 150.0);
    const double pulse = std::exp(-(t - 40.0) * (t - 40.0) / (120.0 * 120.0));
    return ramp * gaussian(x - mu - speed * t, width) +
           1.4 * pulse * gaussian(x - mu, 0.75 * width) +
           ramp * gaussian(x - mu + speed * t, width);
}

Grid crossing_waves_default_grid() { return Grid{0.0, 400.0, 400, -10.0, 10.0, 200}; }
Grid pretrain_default_grid() { return Grid{0.0, 400.0, 400, 0.0, 200.0, 200}; }
Grid fire_toy_default_grid() { return Grid{0.0, 250.0, 250, 0.0, 1400.0, 300}; }

SnapshotMatrix gen_crossing_waves(const Grid& grid) { return sample_field(grid, crossing_waves_value); }
SnapshotMatrix gen_pretrain_field(const Grid& grid) { return sample_field(grid, pretrain_field_value); }
SnapshotMatrix gen_fire_toy(const Grid& grid) { return sample_field(grid, fire_toy_value); }

std::vector<std::string> generator_names() { return {"crossing-waves", "pretrain", "fire-toy"}; }

SnapshotMatrix generate_snapshot(const std::string& name, const Grid& grid) {
    if (name == "crossing-waves") return gen_crossing_waves(grid);
    if (name == "pretrain") return gen_pretrain_field(grid);
    if (name == "fire-toy") return gen_fire_toy(grid);
    std::string names;
    for (const auto& n : generator_names()) names += " " + n;
    fail(ErrorCode::invalid_argument, "unknown generator '" + name + "'; available:" + names);
}

Grid default_grid_for(const std::string& name) {
    if (name == "crossing-waves") return crossing_waves_default_grid();
    if (name == "pretrain") return pretrain_default_grid();
    if (name == "fire-toy") return fire_toy_default_grid();
    std::string names;
    for (const auto& n : generator_names()) names += " " + n;
    fail(ErrorCode::invalid_argument, "unknown generator '" + name + "'; available:" + names);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& context) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || end != begin + s.size())
        fail(ErrorCode::parse, context + ": expected a number, got '" + s + "'");
    return v;
}

namespace {

constexpr const char* kBinaryMagic = "NSPODSNAP";
constexpr const char* kCsvMagic = "nspod_snapshot_csv";

void write_le_doubles(std::ostream& os, const double* vals, std::size_t count) {
    static_assert(sizeof(double) == 8);
    // Serialize explicitly as little-endian byte order.
    std::vector<unsigned char> buf(count * 8);
    for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t bits;
        std::memcpy(&bits, &vals[k], 8);
        for (int b = 0; b < 8; ++b)
            buf[k * 8 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
    }
    os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
}

void read_le_doubles(std::istream& is, double* vals, std::size_t count, const std::string& path) {
    std::vector<unsigned char> buf(count * 8);
    is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    const std::size_t got = std::size_t(is.gcount());
    if (got != count * 8) {
        std::ostringstream os;
        os << path << ": payload truncated, expected " << count * 8 << " bytes of samples, found "
           << got;
        fail(ErrorCode::parse, os.str());
    }
    for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= std::uint64_t(buf[k * 8 + b]) << (8 * b);
        std::memcpy(&vals[k], &bits, 8);
    }
}

}  // namespace

void save_snapshot(const std::string& path, const SnapshotMatrix& snap) {
    snap.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    os << kBinaryMagic << " 1\n"
       << snap.grid.m << " " << snap.grid.n << "\n"
       << format_double(snap.grid.x_min) << " " << format_double(snap.grid.x_max) << " "
       << format_double(snap.grid.t_min) << " " << format_double(snap.grid.t_max) << "\n";
    // Column-major payload: one snapshot (time column) after another.
    std::vector<double> col(snap.grid.m);
    for (std::size_t j = 0; j < snap.grid.n; ++j) {
        for (std::size_t i = 0; i < snap.grid.m; ++i) col[i] = snap.values(i, j);
        write_le_doubles(os, col.data(), col.size());
    }
    if (!os) fail(ErrorCode::io, "write failed for '" + path + "'");
}

void save_snapshot_csv(const std::string& path, const SnapshotMatrix& snap) {
    snap.validate();
    std::ofstream os(path);
    if (!os) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    os << kCsvMagic << ",1," << snap.grid.m << "," << snap.grid.n << ","
       << format_double(snap.grid.x_min) << "," << format_double(snap.grid.x_max) << ","
       << format_double(snap.grid.t_min) << "," << format_double(snap.grid.t_max) << "\n";
    for (std::size_t i = 0; i < snap.grid.m; ++i) {
        for (std::size_t j = 0; j < snap.grid.n; ++j) {
            if (j) os << ",";
            os << format_double(snap.values(i, j));
        }
        os << "\n";
    }
    if (!os) fail(ErrorCode::io, "write failed for '" + path + "'");
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::size_t parse_count(const std::string& s, const std::string& context) {
    const double v = parse_double(s, context);
    if (v < 2 || v != std::floor(v))
        fail(ErrorCode::parse, context + ": expected an integer >= 2, got '" + s + "'");
    return std::size_t(v);
}

SnapshotMatrix load_snapshot_binary(const std::string& path, std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != kBinaryMagic)
        fail(ErrorCode::parse, path + ": malformed header (line 1): bad magic");
    if (version != 1)
        fail(ErrorCode::parse, path + ": unsupported snapshot version " + std::to_string(version));

    SnapshotMatrix snap;
    std::string tok;
    auto next = [&](const char* what) -> std::string {
        if (!(is >> tok))
            fail(ErrorCode::parse, path + ": malformed header: missing " + std::string(what));
        return tok;
    };
    snap.grid.m = parse_count(next("M"), path + ": M");
    snap.grid.n = parse_count(next("N"), path + ": N");
    snap.grid.x_min = parse_double(next("x_min"), path + ": x_min");
    snap.grid.x_max = parse_double(next("x_max"), path + ": x_max");
    snap.grid.t_min = parse_double(next("t_min"), path + ": t_min");
    snap.grid.t_max = parse_double(next("t_max"), path + ": t_max");
    is.get();  // newline before the payload

    snap.values = Matrix(snap.grid.m, snap.grid.n);
    std::vector<double> col(snap.grid.m);
    for (std::size_t j = 0; j < snap.grid.n; ++j) {
        read_le_doubles(is, col.data(), col.size(), path);
        for (std::size_t i = 0; i < snap.grid.m; ++i) snap.values(i, j) = col[i];
    }
    char extra;
    if (is.read(&extra, 1) && is.gcount() == 1)
        fail(ErrorCode::parse, path + ": trailing bytes after payload");
    if (!snap.values.all_finite())
        fail(ErrorCode::parse, path + ": payload contains non-finite entries");
    snap.grid.validate();
    return snap;
}

SnapshotMatrix load_snapshot_csv(const std::string& path, std::istream& is) {
    std::string line;
    if (!std::getline(is, line))
        fail(ErrorCode::parse, path + ": empty file");
    auto head = split(line, ',');
    if (head.size() != 8 || head[0] != kCsvMagic)
        fail(ErrorCode::parse, path + ": malformed header (line 1): expected 8 metadata fields");
    if (head[1] != "1")
        fail(ErrorCode::parse, path + ": unsupported snapshot version " + head[1]);

    SnapshotMatrix snap;
    snap.grid.m = parse_count(head[2], path + ": M (line 1)");
    snap.grid.n = parse_count(head[3], path + ": N (line 1)");
    snap.grid.x_min = parse_double(head[4], path + ": x_min (line 1)");
    snap.grid.x_max = parse_double(head[5], path + ": x_max (line 1)");
    snap.grid.t_min = parse_double(head[6], path + ": t_min (line 1)");
    snap.grid.t_max = parse_double(head[7], path + ": t_max (line 1)");

    snap.values = Matrix(snap.grid.m, snap.grid.n);
    for (std::size_t i = 0; i < snap.grid.m; ++i) {
        if (!std::getline(is, line)) {
            std::ostringstream os;
            os << path << ": expected " << snap.grid.m << " data rows, found " << i;
            fail(ErrorCode::parse, os.str());
        }
        auto cells = split(line, ',');
        if (cells.size() != snap.grid.n) {
            std::ostringstream os;
            os << path << " (line " << i + 2 << "): expected " << snap.grid.n << " values, found "
               << cells.size();
            fail(ErrorCode::parse, os.str());
        }
        for (std::size_t j = 0; j < snap.grid.n; ++j) {
            std::ostringstream ctx;
            ctx << path << " (line " << i + 2 << ", column " << j + 1 << ")";
            snap.values(i, j) = parse_double(cells[j], ctx.str());
        }
    }
    if (std::getline(is, line) && !line.empty())
        fail(ErrorCode::parse, path + ": trailing content after data rows");
    if (!snap.values.all_finite())
        fail(ErrorCode::parse, path + ": payload contains non-finite entries");
    snap.grid.validate();
    return snap;
}

}  // namespace

SnapshotMatrix load_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::io, "cannot open '" + path + "' for reading");
    char probe[20] = {};
    is.read(probe, sizeof(probe) - 1);
    is.clear();
    is.seekg(0);
    if (std::strncmp(probe, kBinaryMagic, std::strlen(kBinaryMagic)) == 0)
        return load_snapshot_binary(path, is);
    if (std::strncmp(probe, kCsvMagic, std::strlen(kCsvMagic)) == 0)
        return load_snapshot_csv(path, is);
    fail(ErrorCode::parse, path + ": not a snapshot file (unrecognized magic)");
}

}  // namespace nspod
