#pragma once

#include <string>
#include <vector>

#include "linalg.hpp"

namespace nspod {

/// Uniform space-time grid, endpoints inclusive.
struct Grid {
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t m = 2;  // spatial points
    double t_min = 0.0;
    double t_max = 1.0;
    std::size_t n = 2;  // time points

    double dx() const { return (x_max - x_min) / double(m - 1); }
    double dt() const { return (t_max - t_min) / double(n - 1); }
    double x(std::size_t i) const { return x_min + double(i) * dx(); }
    double t(std::size_t j) const { return t_min + double(j) * dt(); }

    void validate() const;
    bool operator==(const Grid&) const = default;
};

/// M x N field samples; entry (m, n) = q(x_m, t_n). Columns are snapshots.
struct SnapshotMatrix {
    Grid grid;
    Matrix values;  // grid.m x grid.n

    void validate() const;
};

// Scalar field definitions behind the bundled generators. Exposed so tests
// can evaluate them off-grid.
double crossing_waves_value(double x, double t);
double crossing_waves_shift1(double t);  // cubic path of the sine wave
double crossing_waves_shift2(double t);  // linear path of the cosine wave
double pretrain_field_value(double x, double t);
double fire_toy_value(double x, double t);

Grid crossing_waves_default_grid();
Grid pretrain_default_grid();
Grid fire_toy_default_grid();

/// Two Gaussian waves on crossing polynomial paths.
SnapshotMatrix gen_crossing_waves(const Grid& grid);

/// Two Gaussian bumps on straight opposite paths, used for shift pretraining.
SnapshotMatrix gen_pretrain_field(const Grid& grid);

/// NON-CANONICAL three-frame toy: two outward-traveling fronts plus a central
/// ignition pulse. A stand-in dataset for exercising K=3 decompositions; it
/// is not the output of any physical model.
SnapshotMatrix gen_fire_toy(const Grid& grid);

/// Named generator dispatch ("crossing-waves", "pretrain", "fire-toy").
SnapshotMatrix generate_snapshot(const std::string& name, const Grid& grid);
Grid default_grid_for(const std::string& name);
std::vector<std::string> generator_names();

// Snapshot files. Binary format: text header (magic, version, M, N, grid
// extents) followed by M*N little-endian doubles in column-major order.
// CSV format: metadata header row, then M rows of N values. Both round-trip
// doubles exactly. load_snapshot sniffs the format from the leading bytes.
void save_snapshot(const std::string& path, const SnapshotMatrix& snap);
void save_snapshot_csv(const std::string& path, const SnapshotMatrix& snap);
SnapshotMatrix load_snapshot(const std::string& path);

// Exact text round-trip for doubles (shortest form is not required; 17
// significant digits always reparse to the same bits).
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);

}  // namespace nspod
