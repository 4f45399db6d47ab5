#include "fbev/loss.hpp"

#include <cmath>

namespace fbev {

void LossConfig::validate() const {
    if (class_weights.size() == 0 || (class_weights.array() <= 0.0).any())
        throw ConfigError("LossConfig: class weights must be positive");
    if (!(eps > 0.0 && eps <= 1e-3)) throw ConfigError("LossConfig: eps outside (0, 1e-3]");
    if (lambda < 0.0) throw ConfigError("LossConfig: lambda must be non-negative");
}

LossConfig uniform_weights(int num_classes) {
    LossConfig cfg;
    cfg.class_weights = Eigen::VectorXd::Ones(num_classes);
    return cfg;
}

LossConfig reference_weights() {
    LossConfig cfg;
    cfg.class_weights.resize(kNumClasses);
    cfg.class_weights << 1e-3, 13.0, 3.0, 1.0, 1.0;
    return cfg;
}

ChannelGrid softmax_channels(const ChannelGrid& logits) {
    const size_t nc = logits.size();
    const auto nx = logits[0].rows();
    const auto ny = logits[0].cols();
    ChannelGrid out(nc, Grid(nx, ny));
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < ny; ++j) {
            double m = logits[0](i, j);
            for (size_t c = 1; c < nc; ++c) m = std::max(m, logits[c](i, j));
            double z = 0.0;
            for (size_t c = 0; c < nc; ++c) z += std::exp(logits[c](i, j) - m);
            for (size_t c = 0; c < nc; ++c) out[c](i, j) = std::exp(logits[c](i, j) - m) / z;
        }
    return out;
}

SemanticLossResult semantic_loss(const ChannelGrid& pred_prob, const GridI& gt_class,
                                 const Grid& visibility, const LossConfig& cfg) {
    cfg.validate();
    const int nc = static_cast<int>(pred_prob.size());
    if (cfg.class_weights.size() < nc) throw ShapeError("semantic_loss: missing class weights");
    const auto nx = gt_class.rows();
    const auto ny = gt_class.cols();
    for (const auto& g : pred_prob)
        if (g.rows() != nx || g.cols() != ny) throw ShapeError("semantic_loss: shape mismatch");
    if (visibility.rows() != nx || visibility.cols() != ny)
        throw ShapeError("semantic_loss: visibility shape mismatch");

    double vis_mass = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < ny; ++j) {
            double s = 0.0;
            for (int c = 0; c < nc; ++c) s += pred_prob[static_cast<size_t>(c)](i, j);
            if (std::abs(s - 1.0) > 1e-6)
                throw DomainError("semantic_loss: prediction is not a probability simplex");
            const int gt = gt_class(i, j);
            if (gt < 0 || gt >= nc) throw DataError("semantic_loss: ground-truth class id out of range");
            vis_mass += visibility(i, j);
        }

    SemanticLossResult res;
    res.grad_logits = zero_channels(nc, static_cast<int>(nx), static_cast<int>(ny));
    if (vis_mass == 0.0) return res;  // fully occluded: no loss, no gradient

    double acc = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < ny; ++j) {
            const double vis = visibility(i, j);
            if (vis == 0.0) continue;
            const int gt = gt_class(i, j);
            const double alpha = cfg.class_weights[gt];
            const double p_gt = std::max(pred_prob[static_cast<size_t>(gt)](i, j), cfg.eps);
            acc -= vis * alpha * std::log(p_gt);
            const double scale = vis * alpha / vis_mass;
            for (int c = 0; c < nc; ++c)
                res.grad_logits[static_cast<size_t>(c)](i, j) =
                    scale * (pred_prob[static_cast<size_t>(c)](i, j) - (c == gt ? 1.0 : 0.0));
        }
    res.loss = acc / vis_mass;
    return res;
}

OcclusionLossResult occlusion_loss(const Grid& pred_occ, const Grid& gt_occ, double eps,
                                   bool logistic_grad) {
    if (pred_occ.rows() != gt_occ.rows() || pred_occ.cols() != gt_occ.cols())
        throw ShapeError("occlusion_loss: shape mismatch");
    const double n = static_cast<double>(pred_occ.size());
    OcclusionLossResult res;
    res.grad = Grid::Zero(pred_occ.rows(), pred_occ.cols());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pred_occ.rows(); ++i)
        for (Eigen::Index j = 0; j < pred_occ.cols(); ++j) {
            const double gt = gt_occ(i, j);
            if (gt != 0.0 && gt != 1.0)
                throw DomainError("occlusion_loss: ground truth must be binary");
            const double p = std::clamp(pred_occ(i, j), eps, 1.0 - eps);
            acc -= gt * std::log(p) + (1.0 - gt) * std::log(1.0 - p);
            res.grad(i, j) = logistic_grad ? (p - gt) / n : (p - gt) / (p * (1.0 - p)) / n;
        }
    res.loss = acc / n;
    return res;
}

}  // namespace fbev
