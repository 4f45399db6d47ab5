#include "fbev/learn.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace fbev {

Optimizer optimizer_from_string(const std::string& name) {
    if (name == "gd") return Optimizer::Gd;
    if (name == "adam") return Optimizer::Adam;
    throw ConfigError("unknown optimizer: " + name);
}

FrameData make_frame(const Scene& scene, const SceneParams& params,
                     const std::vector<RigCamera>& rig, const GridSpec& spec,
                     const DepthBins& bins, int stride, int noise_camera, double noise_scale,
                     uint64_t noise_seed) {
    FrameData frame;
    std::mt19937_64 rng(noise_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> any_class(0, kNumClasses - 1);

    std::vector<LiftedPoints> parts;
    for (size_t k = 0; k < rig.size(); ++k) {
        const RenderedView view = render_view(scene, params, rig[k], static_cast<int>(k));
        const int hf = rig[k].intrinsics.height / stride;
        const int wf = rig[k].intrinsics.width / stride;
        Eigen::MatrixXd feats = semantic_features(view, hf, wf);
        if (static_cast<int>(k) == noise_camera && noise_scale > 0.0) {
            // Positive mass on a random class channel per pixel; mostly wrong,
            // so the noisy camera is systematically less reliable.
            for (Eigen::Index p = 0; p < feats.cols(); ++p)
                feats(any_class(rng), p) += unit(rng) * noise_scale;
        }
        const Eigen::MatrixXd depth = gt_depth_distribution(view, bins, hf, wf);
        const RayGrid rays = build_ray_grid(rig[k].intrinsics, hf, wf);
        parts.push_back(lift_points(rays, rig[k].extrinsics, bins, feats, depth,
                                    static_cast<int>(k), /*keep_zero_weight=*/false));
    }
    frame.per_camera =
        splat(concat(parts), spec, Reduce::Sum, static_cast<int>(rig.size()));
    frame.gt_class = scene.semantic;
    const GtOcclusion occ = gt_occlusion(scene, rig, spec);
    frame.gt_visibility = occ.visibility;
    frame.gt_occupied = occ.occupied.cast<double>().matrix();
    return frame;
}

PoolParams init_pool_params(PoolStrategy strategy, const std::vector<FrameData>& frames,
                            const std::vector<CameraIntrinsics>& cameras) {
    if (frames.empty()) throw ShapeError("init_pool_params: no frames");
    const size_t kk = frames[0].per_camera.size();
    // Aggregate a calibration pass over all frames: union of coverage for the
    // per-cell init, mean features for mu.
    std::vector<BevGrid> agg = frames[0].per_camera;
    for (size_t f = 1; f < frames.size(); ++f)
        for (size_t k = 0; k < kk; ++k) {
            agg[k].counts += frames[f].per_camera[k].counts;
            for (size_t c = 0; c < agg[k].features.size(); ++c)
                agg[k].features[c] += frames[f].per_camera[k].features[c];
        }
    for (auto& g : agg)
        for (auto& ch : g.features) ch /= static_cast<double>(frames.size());
    return make_pool_params(strategy, agg, cameras);
}

HeadParams init_head(int num_classes, int num_features) {
    HeadParams h;
    h.w_cls = Eigen::MatrixXd::Zero(num_classes, num_features);
    h.b_cls = Eigen::VectorXd::Zero(num_classes);
    h.w_occ = Eigen::VectorXd::Zero(num_features);
    h.b_occ = 0.0;
    return h;
}

namespace {

// Flat layout: [active pool params][w_cls][b_cls][w_occ][b_occ].
struct Layout {
    struct Block {
        std::string name;
        Eigen::Index size;
    };
    std::vector<Block> blocks;
    Eigen::Index total = 0;

    void add(const std::string& name, Eigen::Index size) {
        blocks.push_back({name, size});
        total += size;
    }
};

Layout layout_of(const PoolParams& pool, const HeadParams& head) {
    Layout l;
    switch (pool.strategy) {
        case PoolStrategy::WeightedSum:
            for (size_t k = 0; k < pool.W.size(); ++k)
                for (size_t c = 0; c < pool.W[k].size(); ++c)
                    l.add("W[" + std::to_string(k) + "][" + std::to_string(c) + "]",
                          pool.W[k][c].size());
            break;
        case PoolStrategy::PerCellSensor:
            for (size_t k = 0; k < pool.w_cell.size(); ++k)
                l.add("w_cell[" + std::to_string(k) + "]", pool.w_cell[k].size());
            break;
        case PoolStrategy::IntrinsicEmbed:
            for (size_t k = 0; k < pool.E.size(); ++k)
                for (size_t c = 0; c < pool.E[k].size(); ++c)
                    l.add("E[" + std::to_string(k) + "][" + std::to_string(c) + "]",
                          pool.E[k][c].size());
            l.add("mu", pool.mu.size());
            l.add("intrinsic_map", pool.intrinsic_map.size());
            l.add("intrinsic_bias", pool.intrinsic_bias.size());
            break;
        default:
            break;
    }
    l.add("w_cls", head.w_cls.size());
    l.add("b_cls", head.b_cls.size());
    l.add("w_occ", head.w_occ.size());
    l.add("b_occ", 1);
    return l;
}

template <typename Fn>
void for_each_block(const PoolParams& pool, const HeadParams& head, Fn&& fn) {
    // Visit (mutable) parameter storage in flat-layout order.
    auto& p = const_cast<PoolParams&>(pool);
    auto& h = const_cast<HeadParams&>(head);
    switch (pool.strategy) {
        case PoolStrategy::WeightedSum:
            for (auto& wk : p.W)
                for (auto& g : wk) fn(g.data(), g.size());
            break;
        case PoolStrategy::PerCellSensor:
            for (auto& g : p.w_cell) fn(g.data(), g.size());
            break;
        case PoolStrategy::IntrinsicEmbed:
            for (auto& ek : p.E)
                for (auto& g : ek) fn(g.data(), g.size());
            fn(p.mu.data(), p.mu.size());
            fn(p.intrinsic_map.data(), p.intrinsic_map.size());
            fn(p.intrinsic_bias.data(), p.intrinsic_bias.size());
            break;
        default:
            break;
    }
    fn(h.w_cls.data(), h.w_cls.size());
    fn(h.b_cls.data(), h.b_cls.size());
    fn(h.w_occ.data(), h.w_occ.size());
    fn(&h.b_occ, 1);
}

}  // namespace

Eigen::VectorXd flatten_params(const PoolParams& pool, const HeadParams& head) {
    Eigen::VectorXd v(layout_of(pool, head).total);
    Eigen::Index at = 0;
    for_each_block(pool, head, [&](double* data, Eigen::Index n) {
        v.segment(at, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
        at += n;
    });
    return v;
}

void unflatten_params(const Eigen::VectorXd& v, PoolParams& pool, HeadParams& head) {
    if (v.size() != layout_of(pool, head).total)
        throw ShapeError("unflatten_params: size mismatch");
    Eigen::Index at = 0;
    for_each_block(pool, head, [&](double* data, Eigen::Index n) {
        Eigen::Map<Eigen::VectorXd>(data, n) = v.segment(at, n);
        at += n;
    });
}

std::string param_name(const PoolParams& pool, const HeadParams& head, Eigen::Index idx) {
    const Layout l = layout_of(pool, head);
    Eigen::Index at = 0;
    for (const auto& b : l.blocks) {
        if (idx < at + b.size) return b.name + "(" + std::to_string(idx - at) + ")";
        at += b.size;
    }
    return "?";
}

ObjectiveResult pipeline_objective(const std::vector<FrameData>& frames, const PoolParams& pool,
                                   const HeadParams& head, const LossConfig& cfg,
                                   bool with_grad) {
    if (frames.empty()) throw ShapeError("pipeline_objective: no frames");
    const int n_cls = static_cast<int>(head.w_cls.rows());
    const int n_feat = static_cast<int>(head.w_cls.cols());
    const double inv_b = 1.0 / static_cast<double>(frames.size());

    ObjectiveResult res;
    PoolParams pool_grad_acc = pool;  // same shapes, zeroed below
    HeadParams head_grad = init_head(n_cls, n_feat);
    if (with_grad) {
        auto& pg = pool_grad_acc;
        for (auto& wk : pg.W)
            for (auto& g : wk) g.setZero();
        for (auto& g : pg.w_cell) g.setZero();
        for (auto& ek : pg.E)
            for (auto& g : ek) g.setZero();
        pg.mu.setZero();
        pg.intrinsic_map.setZero();
        pg.intrinsic_bias.setZero();
    }

    for (const FrameData& frame : frames) {
        CameraStack stack;
        for (const auto& g : frame.per_camera) stack.push_back(g.features);
        const PoolForward fwd = pool_forward(stack, pool);
        const int nx = static_cast<int>(fwd.output[0].rows());
        const int ny = static_cast<int>(fwd.output[0].cols());

        ChannelGrid logits = zero_channels(n_cls, nx, ny);
        for (int c = 0; c < n_cls; ++c) {
            logits[static_cast<size_t>(c)].array() += head.b_cls[c];
            for (int f = 0; f < n_feat; ++f)
                logits[static_cast<size_t>(c)] += head.w_cls(c, f) * fwd.output[static_cast<size_t>(f)];
        }
        const ChannelGrid probs = softmax_channels(logits);
        const SemanticLossResult sem =
            semantic_loss(probs, frame.gt_class, frame.gt_visibility, cfg);

        Grid occ_logit = Grid::Constant(nx, ny, head.b_occ);
        for (int f = 0; f < n_feat; ++f)
            occ_logit += head.w_occ[f] * fwd.output[static_cast<size_t>(f)];
        const Grid pred_occ = (1.0 / (1.0 + (-occ_logit.array()).exp())).matrix();
        const OcclusionLossResult occ =
            occlusion_loss(pred_occ, frame.gt_occupied, cfg.eps, /*logistic_grad=*/true);

        res.semantic += sem.loss * inv_b;
        res.occlusion += occ.loss * inv_b;
        res.loss += total_loss(sem.loss, occ.loss, cfg.lambda) * inv_b;
        if (!with_grad) continue;

        ChannelGrid d_pooled = zero_channels(n_feat, nx, ny);
        for (int c = 0; c < n_cls; ++c) {
            const Grid& gl = sem.grad_logits[static_cast<size_t>(c)];
            head_grad.b_cls[c] += gl.sum() * inv_b;
            for (int f = 0; f < n_feat; ++f) {
                head_grad.w_cls(c, f) +=
                    (gl.array() * fwd.output[static_cast<size_t>(f)].array()).sum() * inv_b;
                d_pooled[static_cast<size_t>(f)] += head.w_cls(c, f) * gl;
            }
        }
        head_grad.b_occ += cfg.lambda * occ.grad.sum() * inv_b;
        for (int f = 0; f < n_feat; ++f) {
            head_grad.w_occ[f] +=
                cfg.lambda * (occ.grad.array() * fwd.output[static_cast<size_t>(f)].array()).sum() *
                inv_b;
            d_pooled[static_cast<size_t>(f)] += cfg.lambda * head.w_occ[f] * occ.grad;
        }

        const PoolGrads pg = pool_backward(stack, pool, fwd, d_pooled);
        for (size_t k = 0; k < pg.d_W.size(); ++k)
            for (size_t c = 0; c < pg.d_W[k].size(); ++c)
                pool_grad_acc.W[k][c] += pg.d_W[k][c] * inv_b;
        for (size_t k = 0; k < pg.d_w_cell.size(); ++k)
            pool_grad_acc.w_cell[k] += pg.d_w_cell[k] * inv_b;
        for (size_t k = 0; k < pg.d_E.size(); ++k)
            for (size_t c = 0; c < pg.d_E[k].size(); ++c)
                pool_grad_acc.E[k][c] += pg.d_E[k][c] * inv_b;
        if (pg.d_mu.size() > 0) pool_grad_acc.mu += pg.d_mu * inv_b;
        if (pg.d_intrinsic_map.size() > 0)
            pool_grad_acc.intrinsic_map += pg.d_intrinsic_map * inv_b;
        if (pg.d_intrinsic_bias.size() > 0)
            pool_grad_acc.intrinsic_bias += pg.d_intrinsic_bias * inv_b;
    }

    if (with_grad) res.grad = flatten_params(pool_grad_acc, head_grad);
    return res;
}

static void optimizer_step(TrainState& state, const TrainConfig& cfg, const Eigen::VectorXd& grad) {
    Eigen::VectorXd params = flatten_params(state.pool, state.head);
    if (cfg.optimizer == Optimizer::Gd) {
        params -= cfg.lr * grad;
    } else {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        if (state.adam_m.size() != params.size()) {
            state.adam_m = Eigen::VectorXd::Zero(params.size());
            state.adam_v = Eigen::VectorXd::Zero(params.size());
        }
        state.adam_m = beta1 * state.adam_m + (1.0 - beta1) * grad;
        state.adam_v = beta2 * state.adam_v.array().matrix() +
                       (1.0 - beta2) * grad.array().square().matrix();
        const double t = static_cast<double>(state.step + 1);
        const Eigen::ArrayXd m_hat = state.adam_m.array() / (1.0 - std::pow(beta1, t));
        const Eigen::ArrayXd v_hat = state.adam_v.array() / (1.0 - std::pow(beta2, t));
        params.array() -= cfg.lr * m_hat / (v_hat.sqrt() + eps);
    }
    unflatten_params(params, state.pool, state.head);
}

void train_continue(TrainState& state, const std::vector<FrameData>& frames,
                    const TrainConfig& cfg) {
    if (cfg.steps < 1) throw ConfigError("train: steps must be >= 1");
    if (cfg.lr < 0.0) throw ConfigError("train: negative learning rate");
    for (int s = 0; s < cfg.steps; ++s) {
        const ObjectiveResult obj = pipeline_objective(frames, state.pool, state.head, cfg.loss);
        if (!std::isfinite(obj.loss)) {
            std::ostringstream os;
            os << "train: loss diverged at step " << state.step;
            throw NumericError(os.str());
        }
        state.loss_history.push_back(obj.loss);
        optimizer_step(state, cfg, obj.grad);
        ++state.step;
    }
}

TrainState train(const std::vector<FrameData>& frames, const TrainConfig& cfg,
                 const std::vector<CameraIntrinsics>& cameras) {
    TrainState state;
    state.rng_seed = cfg.seed;
    state.pool = init_pool_params(cfg.strategy, frames, cameras);
    const int n_feat = static_cast<int>(frames[0].per_camera[0].features.size());
    state.head = init_head(cfg.num_classes, n_feat);
    train_continue(state, frames, cfg);
    return state;
}

GradCheckResult grad_check(const std::vector<FrameData>& frames, const PoolParams& pool,
                           const HeadParams& head, const LossConfig& cfg, double h) {
    if (!(h >= 1e-7 && h <= 1e-3)) throw ConfigError("grad_check: h outside [1e-7, 1e-3]");
    const ObjectiveResult analytic = pipeline_objective(frames, pool, head, cfg);
    const Eigen::VectorXd base = flatten_params(pool, head);

    std::vector<Eigen::Index> indices;
    if (base.size() <= 1000) {
        indices.resize(static_cast<size_t>(base.size()));
        for (Eigen::Index i = 0; i < base.size(); ++i) indices[static_cast<size_t>(i)] = i;
    } else {
        std::mt19937_64 rng(1234);
        std::uniform_int_distribution<Eigen::Index> pick(0, base.size() - 1);
        for (int i = 0; i < 1000; ++i) indices.push_back(pick(rng));
    }

    PoolParams p = pool;
    HeadParams hd = head;
    GradCheckResult res;
    for (Eigen::Index idx : indices) {
        Eigen::VectorXd v = base;
        v[idx] = base[idx] + h;
        unflatten_params(v, p, hd);
        const double up = pipeline_objective(frames, p, hd, cfg, /*with_grad=*/false).loss;
        v[idx] = base[idx] - h;
        unflatten_params(v, p, hd);
        const double down = pipeline_objective(frames, p, hd, cfg, /*with_grad=*/false).loss;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic.grad[idx];
        const double rel = std::abs(a - numeric) / std::max({1e-4, std::abs(a), std::abs(numeric)});
        if (rel > res.max_rel_error) {
            res.max_rel_error = rel;
            res.worst_index = idx;
            res.worst_name = param_name(pool, head, idx);
        }
    }
    return res;
}

}  // namespace fbev
