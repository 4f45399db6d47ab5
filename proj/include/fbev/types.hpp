#pragma once

#include <Eigen/Dense>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbev {

using Grid = Eigen::MatrixXd;                          // nx x ny scalar field
using GridI = Eigen::MatrixXi;                         // nx x ny integer field
using GridB = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using ChannelGrid = std::vector<Grid>;                 // C channels
using CameraStack = std::vector<ChannelGrid>;          // K cameras x C channels

// Error taxonomy shared across modules. Config/shape/domain/data map to CLI
// exit code 2, numeric to exit code 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SemClass : int {
    Invalid = 0,
    Vehicles = 1,
    Markings = 2,
    Street = 3,
    Background = 4,
};
inline constexpr int kNumClasses = 5;

/// Metric BEV raster extent. Cells are square, ego origin must lie inside.
struct GridSpec {
    double x_min = -25.0;
    double x_max = 25.0;
    double y_min = -25.0;
    double y_max = 25.0;
    double cell = 0.25;

    int nx() const { return static_cast<int>(std::lround((x_max - x_min) / cell)); }
    int ny() const { return static_cast<int>(std::lround((y_max - y_min) / cell)); }

    void validate() const;

    // Cell index of a metric point, or (-1,-1) when outside the extent.
    std::pair<int, int> cell_of(double x, double y) const {
        if (x < x_min || x >= x_max || y < y_min || y >= y_max) return {-1, -1};
        int ix = static_cast<int>(std::floor((x - x_min) / cell));
        int iy = static_cast<int>(std::floor((y - y_min) / cell));
        if (ix < 0 || ix >= nx() || iy < 0 || iy >= ny()) return {-1, -1};
        return {ix, iy};
    }

    double cell_center_x(int ix) const { return x_min + (ix + 0.5) * cell; }
    double cell_center_y(int iy) const { return y_min + (iy + 0.5) * cell; }
};

inline ChannelGrid zero_channels(int c, int nx, int ny) {
    return ChannelGrid(static_cast<size_t>(c), Grid::Zero(nx, ny));
}

}  // namespace fbev
