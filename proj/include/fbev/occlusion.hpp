#pragma once

#include "fbev/types.hpp"

namespace fbev {

/// Per-cell occlusion probability derived from splat coverage.
struct OcclusionMap {
    Grid p_occluded;  // nx x ny, entries in [0, 1]
    double tau = 4.0;
    int kernel_radius = 1;
};

/// Counts points inside a discrete disc of the given radius around each cell,
/// then p_occluded = 1 - min(1, local / (tau * kernel_area)). Out-of-grid
/// neighbours count as zero.
OcclusionMap occlusion_map(const GridI& counts, int kernel_radius, double tau);

/// Visibility p'(o) = 1 - p(o), elementwise.
Grid occupancy(const Grid& p_occluded);

}  // namespace fbev
