#pragma once

#include <cstdint>
#include <random>

namespace nspod {

/// Deterministic uniform generator: mt19937_64 words mapped to [0,1) by
/// taking the top 53 bits. The mapping is fully specified, so a seed yields
/// the same parameter values on every standards-conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double unit() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    std::uint64_t word() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace nspod
