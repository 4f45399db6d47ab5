#pragma once

#include "fbev/camera.hpp"
#include "fbev/lift.hpp"
#include "fbev/types.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fbev {

enum class Reduce { Sum, Max, Mean };
Reduce reduce_from_string(const std::string& name);

/// Per-camera BEV raster after splatting. counts tracks points per cell
/// regardless of the reduction.
struct BevGrid {
    ChannelGrid features;  // C grids, nx x ny
    GridI counts;          // nx x ny
};

struct SplatStats {
    Eigen::Index dropped = 0;  // points outside the grid extent
};

/// Scatter lifted points into per-camera grids. Accumulation order is fixed
/// by sorting on (cell, camera, pixel, bin), so the result is bit-reproducible
/// and independent of input order and worker count. Workers partition the
/// sorted points at cell boundaries.
std::vector<BevGrid> splat(const LiftedPoints& points, const GridSpec& spec, Reduce reduce,
                           int num_cameras, SplatStats* stats = nullptr, int workers = 1);

enum class PoolStrategy { Sum, Max, Mean, WeightedSum, PerCellSensor, IntrinsicEmbed };
PoolStrategy pool_strategy_from_string(const std::string& name);
std::string to_string(PoolStrategy s);

/// Learnable pooling parameters. Only the fields of the active strategy are
/// consulted. The intrinsic-conditioned scale of camera k, channel c is
/// scales(c, k) = intrinsic_map.row(c) * intrinsic_feats.col(k) + intrinsic_bias(c);
/// zero map and unit bias give all-ones scales at init.
struct PoolParams {
    PoolStrategy strategy = PoolStrategy::Sum;
    std::vector<ChannelGrid> W;       // K x C grids (weighted sum)
    std::vector<Grid> w_cell;         // K grids (per-cell sensor weights)
    std::vector<ChannelGrid> E;       // K x C grids (embeddings)
    Eigen::MatrixXd mu;               // C x K per-channel feature means
    Eigen::MatrixXd intrinsic_map;    // C x P
    Eigen::VectorXd intrinsic_bias;   // C
    Eigen::MatrixXd intrinsic_feats;  // P x K, fixed (not learnable)

    Eigen::MatrixXd scales() const;   // C x K
};

/// Normalized intrinsic parameter vector (length 10) used to condition the
/// IntrinsicEmbed scales.
Eigen::VectorXd intrinsic_feature_vector(const CameraIntrinsics& intr);

/// w_cell init: 1 / (number of cameras with counts > 0 at the cell), 0 where
/// no camera reaches.
std::vector<Grid> per_cell_init_weights(const std::vector<BevGrid>& per_camera);

/// Per-channel mean of each camera's BEV features over all cells (C x K).
Eigen::MatrixXd calibrate_mu(const CameraStack& per_camera);

PoolParams make_pool_params(PoolStrategy strategy, const std::vector<BevGrid>& per_camera,
                            const std::vector<CameraIntrinsics>& cameras);

ChannelGrid pool_weighted_sum(const CameraStack& per_camera, const std::vector<ChannelGrid>& W);
ChannelGrid pool_per_cell(const CameraStack& per_camera, const std::vector<Grid>& w_cell);
ChannelGrid pool_intrinsic_embed(const CameraStack& per_camera, const PoolParams& params);

/// Forward pass retaining what the backward pass needs.
struct PoolForward {
    ChannelGrid output;
    std::vector<GridI> argmax;  // Max strategy only: winning camera per (c, cell)
};

PoolForward pool_forward(const CameraStack& per_camera, const PoolParams& params);

struct PoolGrads {
    CameraStack d_per_camera;
    std::vector<ChannelGrid> d_W;
    std::vector<Grid> d_w_cell;
    std::vector<ChannelGrid> d_E;
    Eigen::MatrixXd d_mu;
    Eigen::MatrixXd d_intrinsic_map;
    Eigen::VectorXd d_intrinsic_bias;
};

/// Analytic gradients of pool_forward. For Max, the subgradient routes to the
/// first camera attaining the maximum.
PoolGrads pool_backward(const CameraStack& per_camera, const PoolParams& params,
                        const PoolForward& fwd, const ChannelGrid& upstream);

}  // namespace fbev
