#pragma once

#include "fbev/loss.hpp"
#include "fbev/pool.hpp"
#include "fbev/scenesim.hpp"
#include "fbev/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace fbev {

enum class Optimizer { Gd, Adam };
Optimizer optimizer_from_string(const std::string& name);

/// One training frame: fixed per-camera BEV inputs plus ground truth. The
/// learnable surface is pooling parameters and the linear heads; splat inputs
/// are precomputed and constant.
struct FrameData {
    std::vector<BevGrid> per_camera;
    GridI gt_class;
    Grid gt_visibility;
    Grid gt_occupied;  // binary {0, 1}
};

/// Per-cell linear heads shared across cells: class logits (C_class x C_feat)
/// and a scalar occupancy logit.
struct HeadParams {
    Eigen::MatrixXd w_cls;
    Eigen::VectorXd b_cls;
    Eigen::VectorXd w_occ;
    double b_occ = 0.0;
};

struct TrainConfig {
    PoolStrategy strategy = PoolStrategy::PerCellSensor;
    int steps = 100;
    double lr = 1e-4;
    Optimizer optimizer = Optimizer::Adam;
    uint64_t seed = 0;
    LossConfig loss = uniform_weights();
    int num_classes = kNumClasses;
};

struct TrainState {
    PoolParams pool;
    HeadParams head;
    int step = 0;
    std::vector<double> loss_history;
    uint64_t rng_seed = 0;
    Eigen::VectorXd adam_m, adam_v;  // empty for plain gradient descent
};

/// Renders a scene through the rig and splats ground-truth-depth lifted
/// one-hot class features into per-camera BEV grids. noise_camera >= 0 adds
/// deterministic positive class-channel noise to that camera's features.
FrameData make_frame(const Scene& scene, const SceneParams& params,
                     const std::vector<RigCamera>& rig, const GridSpec& spec,
                     const DepthBins& bins, int stride, int noise_camera = -1,
                     double noise_scale = 0.0, uint64_t noise_seed = 0);

/// Initial pooling parameters calibrated over the whole frame set (per-cell
/// weight init and feature means aggregate across frames).
PoolParams init_pool_params(PoolStrategy strategy, const std::vector<FrameData>& frames,
                            const std::vector<CameraIntrinsics>& cameras = {});
HeadParams init_head(int num_classes, int num_features);

// Flat parameter vector over the active strategy's pool parameters plus the
// heads; the layout is fixed so optimizer state stays aligned.
Eigen::VectorXd flatten_params(const PoolParams& pool, const HeadParams& head);
void unflatten_params(const Eigen::VectorXd& v, PoolParams& pool, HeadParams& head);
std::string param_name(const PoolParams& pool, const HeadParams& head, Eigen::Index idx);

struct ObjectiveResult {
    double loss = 0.0;
    double semantic = 0.0;
    double occlusion = 0.0;
    Eigen::VectorXd grad;
};

/// Mean total loss over the batch (semantic + lambda * occlusion) with its
/// analytic gradient in flat layout.
ObjectiveResult pipeline_objective(const std::vector<FrameData>& frames, const PoolParams& pool,
                                   const HeadParams& head, const LossConfig& cfg,
                                   bool with_grad = true);

TrainState train(const std::vector<FrameData>& frames, const TrainConfig& cfg,
                 const std::vector<CameraIntrinsics>& cameras = {});

/// Continue a checkpointed run for additional steps.
void train_continue(TrainState& state, const std::vector<FrameData>& frames,
                    const TrainConfig& cfg);

struct GradCheckResult {
    double max_rel_error = 0.0;
    Eigen::Index worst_index = -1;
    std::string worst_name;
};

/// Central-difference check of pipeline_objective over every learnable scalar
/// (seeded subsample of 1000 above that size). Relative error uses
/// |a - n| / max(1e-4, |a|, |n|).
GradCheckResult grad_check(const std::vector<FrameData>& frames, const PoolParams& pool,
                           const HeadParams& head, const LossConfig& cfg, double h = 1e-5);

}  // namespace fbev
