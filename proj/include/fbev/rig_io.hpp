#pragma once

#include "fbev/lift.hpp"
#include "fbev/scenesim.hpp"
#include "fbev/types.hpp"

#include <string>
#include <vector>

namespace fbev {

/// Calibration document: grid extent, depth bins, per-camera models and poses.
struct Rig {
    GridSpec grid;
    DepthBins bins;
    std::vector<RigCamera> cameras;
};

/// Parses the section-based text format ([grid], [depth_bins], [camera NAME]).
/// Invariants of all embedded types are validated; errors carry file:line.
Rig load_rig(const std::string& path);
Rig parse_rig(const std::string& text, const std::string& filename = "<string>");

std::string format_rig(const Rig& rig);
void save_rig(const std::string& path, const Rig& rig);

}  // namespace fbev
