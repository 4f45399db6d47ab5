#include "fbev/occlusion.hpp"

#include <vector>

namespace fbev {

OcclusionMap occlusion_map(const GridI& counts, int kernel_radius, double tau) {
    if (tau <= 0.0) throw ConfigError("occlusion_map: tau must be positive");
    if (kernel_radius < 0) throw ConfigError("occlusion_map: negative kernel radius");

    std::vector<std::pair<int, int>> offsets;
    for (int dx = -kernel_radius; dx <= kernel_radius; ++dx)
        for (int dy = -kernel_radius; dy <= kernel_radius; ++dy)
            if (dx * dx + dy * dy <= kernel_radius * kernel_radius) offsets.emplace_back(dx, dy);

    const int nx = static_cast<int>(counts.rows());
    const int ny = static_cast<int>(counts.cols());
    const double denom = tau * static_cast<double>(offsets.size());

    OcclusionMap map;
    map.tau = tau;
    map.kernel_radius = kernel_radius;
    map.p_occluded.resize(nx, ny);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            long local = 0;
            for (auto [dx, dy] : offsets) {
                const int x = i + dx;
                const int y = j + dy;
                if (x >= 0 && x < nx && y >= 0 && y < ny) local += counts(x, y);
            }
            map.p_occluded(i, j) = 1.0 - std::min(1.0, static_cast<double>(local) / denom);
        }
    return map;
}

Grid occupancy(const Grid& p_occluded) {
    if ((p_occluded.array() < 0.0).any() || (p_occluded.array() > 1.0).any())
        throw DomainError("occupancy: probabilities outside [0, 1]");
    return Grid::Ones(p_occluded.rows(), p_occluded.cols()) - p_occluded;
}

}  // namespace fbev
