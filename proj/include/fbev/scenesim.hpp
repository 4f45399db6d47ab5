#pragma once

#include "fbev/camera.hpp"
#include "fbev/lift.hpp"
#include "fbev/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

namespace fbev {

/// Axis extents in the box frame; yaw rotates box x toward world y.
struct OrientedBox {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double length = 4.0;  // along local x
    double width = 2.0;   // along local y
    double yaw = 0.0;

    bool contains(double x, double y) const;
};

struct Wall {
    Eigen::Vector2d p0, p1;
    double height = 2.5;
};

struct SceneParams {
    int n_vehicles = 6;
    int n_walls = 2;
    double road_half_width = 7.0;    // street band |y| <= this
    double marking_width = 0.5;      // stripe thickness
    double marking_dash = 3.0;       // dash period along x (0 = solid)
    double vehicle_height = 1.5;
    double min_vehicle_distance = 2.5;  // from ego origin
    int max_retries = 200;
    // Snap vehicle yaw to quarter turns and box edges to BEV cell centers so
    // raster ground truth and splat votes agree at footprint boundaries.
    bool grid_aligned = false;
};

struct Scene {
    GridSpec extent;
    GridI semantic;  // nx x ny class ids
    std::vector<OrientedBox> vehicles;
    std::vector<Wall> occluders;
    double vehicle_height = 1.5;
    uint64_t seed = 0;
};

Scene make_scene(const GridSpec& spec, uint64_t seed, const SceneParams& params);

/// Semantic class of the ground plane at a metric point (markings/street/
/// background geometry, no vehicles).
SemClass ground_class(const Scene& scene, const SceneParams& params, double x, double y);

inline constexpr double kDepthMiss = std::numeric_limits<double>::infinity();

struct RenderedView {
    GridI semantic;  // H x W class ids, Invalid where no surface is hit
    Grid depth;      // H x W meters (ray-cast distance), kDepthMiss on miss
    int camera = 0;
};

struct RigCamera {
    CameraIntrinsics intrinsics;
    CameraExtrinsics extrinsics;
    std::string name;
};

RenderedView render_view(const Scene& scene, const SceneParams& params, const RigCamera& cam,
                         int camera_index);
std::vector<RenderedView> render_views(const Scene& scene, const SceneParams& params,
                                       const std::vector<RigCamera>& rig);

struct GtOcclusion {
    Grid visibility;   // nx x ny in [0, 1]
    GridB occupied;    // visibility >= 0.5
};

/// Fraction of 4x4 sub-points per cell with an unobstructed in-FOV line of
/// sight to at least one camera. A vehicle footprint with any visible
/// sub-point is marked fully visible.
GtOcclusion gt_occlusion(const Scene& scene, const std::vector<RigCamera>& rig,
                         const GridSpec& spec, int subsamples = 4);

/// One-hot depth distribution (D x Hf*Wf) at feature resolution, sampled at
/// feature-cell center pixels. Misses give all-zero columns. clamped_out, when
/// given, counts depths clamped to the last bin.
Eigen::MatrixXd gt_depth_distribution(const RenderedView& view, const DepthBins& bins, int hf,
                                      int wf, Eigen::Index* clamped_out = nullptr);

/// One-hot class features (kNumClasses x Hf*Wf) at feature resolution.
Eigen::MatrixXd semantic_features(const RenderedView& view, int hf, int wf);

/// Default 4-camera surround fisheye rig used by demos and fixtures.
std::vector<RigCamera> default_rig(int width = 1280, int height = 800, double a1 = 200.0,
                                   double cam_height = 2.2, double pitch_down = 0.7);

}  // namespace fbev
