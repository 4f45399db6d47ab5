#pragma once

#include "fbev/types.hpp"

#include <Eigen/Dense>

namespace fbev {

struct LossConfig {
    Eigen::VectorXd class_weights;  // alpha_i, one per class
    double lambda = 1.0;
    double eps = 1e-7;

    void validate() const;
};

/// Class weights for the five classes {invalid, vehicles, markings, street,
/// background}. Invalid keeps weight tiny so it never dominates.
LossConfig uniform_weights(int num_classes = kNumClasses);
LossConfig reference_weights();  // 13-3-1-1 over vehicles/markings/street/background

struct SemanticLossResult {
    double loss = 0.0;
    ChannelGrid grad_logits;  // softmax-CE gradient, visibility- and alpha-scaled
};

/// Visibility-masked weighted cross-entropy, normalized by total visibility
/// mass. Cells with zero visibility contribute nothing to loss or gradient.
SemanticLossResult semantic_loss(const ChannelGrid& pred_prob, const GridI& gt_class,
                                 const Grid& visibility, const LossConfig& cfg);

struct OcclusionLossResult {
    double loss = 0.0;
    Grid grad;  // wrt pred (generic) or wrt the logistic pre-activation
};

/// Mean binary cross-entropy. logistic_grad selects the simplified
/// (pred - gt) / N gradient valid when pred came from a logistic unit.
OcclusionLossResult occlusion_loss(const Grid& pred_occ, const Grid& gt_occ, double eps = 1e-7,
                                   bool logistic_grad = false);

inline double total_loss(double sem, double occ, double lambda) { return sem + lambda * occ; }

ChannelGrid softmax_channels(const ChannelGrid& logits);

}  // namespace fbev
