#pragma once

#include "fbev/camera.hpp"
#include "fbev/types.hpp"

#include <Eigen/Dense>

namespace fbev {

/// Precomputed unit rays at feature resolution, camera frame.
/// dirs.col(i * wf + j) is the ray through the source-pixel center of
/// feature cell (i, j); valid marks in-FOV cells.
struct RayGrid {
    int hf = 0;
    int wf = 0;
    int stride = 1;
    Eigen::Matrix3Xd dirs;
    GridB valid;  // hf x wf
};

RayGrid build_ray_grid(const CameraIntrinsics& intr, int hf, int wf);
RayGrid build_cylindrical_ray_grid(const CylindricalIntrinsics& cyl, int hf, int wf);

struct DepthBins {
    double d_min = 0.5;
    double d_max = 25.0;
    double step = 0.5;

    void validate() const;
    int count() const { return static_cast<int>(std::lround((d_max - d_min) / step)); }
    double center(int k) const { return d_min + (k + 0.5) * step; }
    Eigen::VectorXd centers() const;

    // Half-open bins [lo, hi); depths beyond d_max clamp to the last bin.
    // Returns (bin, clamped); bin -1 for depths below d_min or non-finite.
    std::pair<int, bool> bin_of(double depth) const;
};

/// Lifted 3D point cloud in the vehicle frame. Column i of features is the
/// weighted feature of point i.
struct LiftedPoints {
    Eigen::Matrix3Xd positions;  // 3 x N, meters
    Eigen::MatrixXd features;    // C x N
    Eigen::VectorXi camera_id;
    Eigen::VectorXi pixel_id;
    Eigen::VectorXi bin_id;

    Eigen::Index size() const { return positions.cols(); }
};

/// Outer-product lift: every valid pixel spawns one point per depth bin,
/// feature scaled by that bin's depth weight. features and depth_dist are
/// column-per-pixel (pixel index = i * wf + j).
/// keep_zero_weight=false drops zero-weight points (sparse one-hot inputs).
LiftedPoints lift_points(const RayGrid& rays, const CameraExtrinsics& extr, const DepthBins& bins,
                         const Eigen::MatrixXd& features, const Eigen::MatrixXd& depth_dist,
                         int camera_id = 0, bool keep_zero_weight = true);

LiftedPoints concat(const std::vector<LiftedPoints>& parts);

}  // namespace fbev
