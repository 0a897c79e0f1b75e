#pragma once

#include <cstdint>

#include "layoutgen/data/dataset.hpp"

namespace layoutgen::data {

/// Procedural floorplan: a randomly inset footprint sliced into `room_count`
/// rooms (sometimes with an L-shaped merge), typed, with interior doors on a
/// spanning tree of shared walls plus random extras and one front door.
/// Every attempt is checked by reading its diagram back from the masks; after
/// 100 failed attempts generation restarts from seed + 1.
Sample generate_synthetic(std::uint64_t seed, int room_count, int resolution = 64);

/// `count` samples per room count 5..8, seeds derived from `seed`.
Dataset generate_dataset(std::uint64_t seed, int count_per_room_count, int resolution);

}  // namespace layoutgen::data
