#pragma once

#include <cstdint>
#include <string>

#include "model.hpp"

namespace nspod {

/// Model checkpoint: both sub-networks, their normalization constants and
/// the seed, as a versioned text container. Doubles are written with 17
/// significant digits, so load(save(m)) reproduces every parameter bitwise.
struct Checkpoint {
    std::uint64_t seed = 0;
    ShapeModel shape;
    ShiftModel shift;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nspod
