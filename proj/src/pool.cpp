#include "fbev/pool.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace fbev {

Reduce reduce_from_string(const std::string& name) {
    if (name == "sum") return Reduce::Sum;
    if (name == "max") return Reduce::Max;
    if (name == "mean") return Reduce::Mean;
    throw ConfigError("unknown reduce: " + name);
}

PoolStrategy pool_strategy_from_string(const std::string& name) {
    if (name == "sum") return PoolStrategy::Sum;
    if (name == "max") return PoolStrategy::Max;
    if (name == "mean") return PoolStrategy::Mean;
    if (name == "weighted_sum") return PoolStrategy::WeightedSum;
    if (name == "per_cell_sensor") return PoolStrategy::PerCellSensor;
    if (name == "intrinsic_embed") return PoolStrategy::IntrinsicEmbed;
    throw ConfigError("unknown pooling strategy: " + name);
}

std::string to_string(PoolStrategy s) {
    switch (s) {
        case PoolStrategy::Sum: return "sum";
        case PoolStrategy::Max: return "max";
        case PoolStrategy::Mean: return "mean";
        case PoolStrategy::WeightedSum: return "weighted_sum";
        case PoolStrategy::PerCellSensor: return "per_cell_sensor";
        case PoolStrategy::IntrinsicEmbed: return "intrinsic_embed";
    }
    return "?";
}

namespace {

// Accumulate one sorted chunk. Runs of identical (cell, camera) are contiguous
// by construction and never straddle a chunk boundary.
void accumulate_chunk(const LiftedPoints& pts, const std::vector<Eigen::Index>& order,
                      const std::vector<Eigen::Index>& cells, size_t begin, size_t end,
                      Reduce reduce, int ny, std::vector<BevGrid>& grids) {
    const int nc = static_cast<int>(pts.features.rows());
    size_t a = begin;
    while (a < end) {
        const Eigen::Index cell = cells[order[a]];
        const int cam = pts.camera_id[order[a]];
        size_t b = a;
        while (b < end && cells[order[b]] == cell && pts.camera_id[order[b]] == cam) ++b;
        const int ix = static_cast<int>(cell / ny);
        const int iy = static_cast<int>(cell % ny);
        BevGrid& g = grids[static_cast<size_t>(cam)];
        g.counts(ix, iy) += static_cast<int>(b - a);
        for (int c = 0; c < nc; ++c) {
            double acc = pts.features(c, order[a]);
            for (size_t t = a + 1; t < b; ++t) {
                const double v = pts.features(c, order[t]);
                if (reduce == Reduce::Max)
                    acc = std::max(acc, v);
                else
                    acc += v;
            }
            if (reduce == Reduce::Mean) acc /= static_cast<double>(b - a);
            if (reduce == Reduce::Max)
                g.features[static_cast<size_t>(c)](ix, iy) =
                    g.counts(ix, iy) == static_cast<int>(b - a)
                        ? acc
                        : std::max(g.features[static_cast<size_t>(c)](ix, iy), acc);
            else
                g.features[static_cast<size_t>(c)](ix, iy) += acc;
        }
        a = b;
    }
}

}  // namespace

std::vector<BevGrid> splat(const LiftedPoints& pts, const GridSpec& spec, Reduce reduce,
                           int num_cameras, SplatStats* stats, int workers) {
    spec.validate();
    if (num_cameras < 1) throw ConfigError("splat: need at least one camera");
    if (!pts.features.allFinite()) throw DataError("splat: non-finite feature value");
    if (!pts.positions.allFinite()) throw DataError("splat: non-finite position");

    const int nx = spec.nx();
    const int ny = spec.ny();
    const int nc = static_cast<int>(pts.features.rows());
    const Eigen::Index n = pts.size();

    std::vector<Eigen::Index> cells(static_cast<size_t>(n));
    Eigen::Index dropped = 0;
    std::vector<Eigen::Index> order;
    order.reserve(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (pts.camera_id[i] < 0 || pts.camera_id[i] >= num_cameras)
            throw DataError("splat: camera_id out of range");
        auto [ix, iy] = spec.cell_of(pts.positions(0, i), pts.positions(1, i));
        if (ix < 0) {
            cells[static_cast<size_t>(i)] = -1;
            ++dropped;
            continue;
        }
        cells[static_cast<size_t>(i)] = static_cast<Eigen::Index>(ix) * ny + iy;
        order.push_back(i);
    }
    if (stats) stats->dropped = dropped;

    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (cells[static_cast<size_t>(a)] != cells[static_cast<size_t>(b)])
            return cells[static_cast<size_t>(a)] < cells[static_cast<size_t>(b)];
        if (pts.camera_id[a] != pts.camera_id[b]) return pts.camera_id[a] < pts.camera_id[b];
        if (pts.pixel_id[a] != pts.pixel_id[b]) return pts.pixel_id[a] < pts.pixel_id[b];
        return pts.bin_id[a] < pts.bin_id[b];
    });

    std::vector<BevGrid> grids(static_cast<size_t>(num_cameras));
    for (auto& g : grids) {
        g.features = zero_channels(nc, nx, ny);
        g.counts = GridI::Zero(nx, ny);
    }

    workers = std::max(1, workers);
    if (workers == 1 || order.size() < 1024) {
        accumulate_chunk(pts, order, cells, 0, order.size(), reduce, ny, grids);
    } else {
        // Chunk boundaries may not split a cell; per-cell accumulation order
        // is then identical to the serial pass.
        std::vector<size_t> bounds{0};
        for (int w = 1; w < workers; ++w) {
            size_t b = order.size() * static_cast<size_t>(w) / static_cast<size_t>(workers);
            while (b > bounds.back() && b < order.size() &&
                   cells[static_cast<size_t>(order[b])] == cells[static_cast<size_t>(order[b - 1])])
                ++b;
            if (b > bounds.back() && b < order.size()) bounds.push_back(b);
        }
        bounds.push_back(order.size());
        std::vector<std::thread> threads;
        for (size_t t = 0; t + 1 < bounds.size(); ++t)
            threads.emplace_back(accumulate_chunk, std::cref(pts), std::cref(order),
                                 std::cref(cells), bounds[t], bounds[t + 1], reduce, ny,
                                 std::ref(grids));
        for (auto& th : threads) th.join();
    }
    return grids;
}

Eigen::MatrixXd PoolParams::scales() const {
    const Eigen::Index k = intrinsic_feats.cols();
    return intrinsic_map * intrinsic_feats + intrinsic_bias.replicate(1, k);
}

Eigen::VectorXd intrinsic_feature_vector(const CameraIntrinsics& intr) {
    const DistortionModel& m = intr.model;
    Eigen::VectorXd phi(10);
    phi << m.f / intr.width, intr.cx / intr.width, intr.cy / intr.height, m.theta_max / M_PI,
        m.xi, m.alpha, m.beta, m.poly[1] / std::max(m.f, 1.0), m.poly[2] / std::max(m.f, 1.0),
        m.poly[3] / std::max(m.f, 1.0);
    return phi;
}

std::vector<Grid> per_cell_init_weights(const std::vector<BevGrid>& per_camera) {
    if (per_camera.empty()) throw ShapeError("per_cell_init_weights: no cameras");
    const int nx = static_cast<int>(per_camera[0].counts.rows());
    const int ny = static_cast<int>(per_camera[0].counts.cols());
    Grid n_seen = Grid::Zero(nx, ny);
    for (const auto& g : per_camera)
        n_seen += (g.counts.array() > 0).cast<double>().matrix();
    std::vector<Grid> w(per_camera.size(), Grid::Zero(nx, ny));
    for (size_t k = 0; k < per_camera.size(); ++k)
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j)
                if (per_camera[k].counts(i, j) > 0) w[k](i, j) = 1.0 / n_seen(i, j);
    return w;
}

Eigen::MatrixXd calibrate_mu(const CameraStack& per_camera) {
    if (per_camera.empty()) throw ShapeError("calibrate_mu: no cameras");
    const size_t nc = per_camera[0].size();
    Eigen::MatrixXd mu(nc, per_camera.size());
    for (size_t k = 0; k < per_camera.size(); ++k)
        for (size_t c = 0; c < nc; ++c) mu(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = per_camera[k][c].mean();
    return mu;
}

PoolParams make_pool_params(PoolStrategy strategy, const std::vector<BevGrid>& per_camera,
                            const std::vector<CameraIntrinsics>& cameras) {
    if (per_camera.empty()) throw ShapeError("make_pool_params: no cameras");
    const size_t kk = per_camera.size();
    const size_t cc = per_camera[0].features.size();
    const int nx = static_cast<int>(per_camera[0].counts.rows());
    const int ny = static_cast<int>(per_camera[0].counts.cols());

    PoolParams p;
    p.strategy = strategy;
    p.W.assign(kk, zero_channels(static_cast<int>(cc), nx, ny));
    for (auto& wk : p.W)
        for (auto& g : wk) g.setOnes();
    p.w_cell = per_cell_init_weights(per_camera);
    p.E.assign(kk, zero_channels(static_cast<int>(cc), nx, ny));
    CameraStack stack;
    for (const auto& g : per_camera) stack.push_back(g.features);
    p.mu = calibrate_mu(stack);
    const int np = 10;
    p.intrinsic_map = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cc), np);
    p.intrinsic_bias = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cc));
    p.intrinsic_feats = Eigen::MatrixXd::Zero(np, static_cast<Eigen::Index>(kk));
    if (!cameras.empty()) {
        if (cameras.size() != kk)
            throw ShapeError("make_pool_params: camera count mismatch");
        for (size_t k = 0; k < kk; ++k)
            p.intrinsic_feats.col(static_cast<Eigen::Index>(k)) = intrinsic_feature_vector(cameras[k]);
    }
    return p;
}

static void check_stack(const CameraStack& per_camera) {
    if (per_camera.empty() || per_camera[0].empty())
        throw ShapeError("pool: empty camera stack");
    const auto nx = per_camera[0][0].rows();
    const auto ny = per_camera[0][0].cols();
    for (const auto& cam : per_camera) {
        if (cam.size() != per_camera[0].size()) throw ShapeError("pool: channel count mismatch");
        for (const auto& g : cam)
            if (g.rows() != nx || g.cols() != ny) throw ShapeError("pool: grid shape mismatch");
    }
}

ChannelGrid pool_weighted_sum(const CameraStack& per_camera, const std::vector<ChannelGrid>& W) {
    check_stack(per_camera);
    if (W.size() != per_camera.size()) throw ShapeError("pool_weighted_sum: weight count mismatch");
    const size_t nc = per_camera[0].size();
    ChannelGrid out = zero_channels(static_cast<int>(nc), static_cast<int>(per_camera[0][0].rows()),
                                    static_cast<int>(per_camera[0][0].cols()));
    for (size_t k = 0; k < per_camera.size(); ++k) {
        if (W[k].size() != nc) throw ShapeError("pool_weighted_sum: weight channel mismatch");
        for (size_t c = 0; c < nc; ++c)
            out[c].array() += W[k][c].array() * per_camera[k][c].array();
    }
    return out;
}

ChannelGrid pool_per_cell(const CameraStack& per_camera, const std::vector<Grid>& w_cell) {
    check_stack(per_camera);
    if (w_cell.size() != per_camera.size()) throw ShapeError("pool_per_cell: weight count mismatch");
    const size_t nc = per_camera[0].size();
    ChannelGrid out = zero_channels(static_cast<int>(nc), static_cast<int>(per_camera[0][0].rows()),
                                    static_cast<int>(per_camera[0][0].cols()));
    for (size_t k = 0; k < per_camera.size(); ++k) {
        if (w_cell[k].rows() != out[0].rows() || w_cell[k].cols() != out[0].cols())
            throw ShapeError("pool_per_cell: weight shape mismatch");
        for (size_t c = 0; c < nc; ++c)
            out[c].array() += w_cell[k].array() * per_camera[k][c].array();
    }
    return out;
}

ChannelGrid pool_intrinsic_embed(const CameraStack& per_camera, const PoolParams& params) {
    check_stack(per_camera);
    const size_t nc = per_camera[0].size();
    const size_t kk = per_camera.size();
    if (params.E.size() != kk || params.mu.cols() != static_cast<Eigen::Index>(kk) ||
        params.mu.rows() != static_cast<Eigen::Index>(nc))
        throw ShapeError("pool_intrinsic_embed: parameter shape mismatch");
    const Eigen::MatrixXd scales = params.scales();
    ChannelGrid out = zero_channels(static_cast<int>(nc), static_cast<int>(per_camera[0][0].rows()),
                                    static_cast<int>(per_camera[0][0].cols()));
    for (size_t k = 0; k < kk; ++k)
        for (size_t c = 0; c < nc; ++c)
            out[c].array() += scales(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) *
                                  (per_camera[k][c].array() - params.mu(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k))) +
                              params.E[k][c].array();
    return out;
}

PoolForward pool_forward(const CameraStack& per_camera, const PoolParams& params) {
    check_stack(per_camera);
    const size_t nc = per_camera[0].size();
    const size_t kk = per_camera.size();
    const int nx = static_cast<int>(per_camera[0][0].rows());
    const int ny = static_cast<int>(per_camera[0][0].cols());
    PoolForward fwd;
    switch (params.strategy) {
        case PoolStrategy::Sum:
        case PoolStrategy::Mean: {
            fwd.output = zero_channels(static_cast<int>(nc), nx, ny);
            for (size_t k = 0; k < kk; ++k)
                for (size_t c = 0; c < nc; ++c) fwd.output[c] += per_camera[k][c];
            if (params.strategy == PoolStrategy::Mean)
                for (auto& g : fwd.output) g /= static_cast<double>(kk);
            break;
        }
        case PoolStrategy::Max: {
            fwd.output = per_camera[0];
            fwd.argmax.assign(nc, GridI::Zero(nx, ny));
            for (size_t k = 1; k < kk; ++k)
                for (size_t c = 0; c < nc; ++c)
                    for (int i = 0; i < nx; ++i)
                        for (int j = 0; j < ny; ++j)
                            if (per_camera[k][c](i, j) > fwd.output[c](i, j)) {
                                fwd.output[c](i, j) = per_camera[k][c](i, j);
                                fwd.argmax[c](i, j) = static_cast<int>(k);
                            }
            break;
        }
        case PoolStrategy::WeightedSum:
            fwd.output = pool_weighted_sum(per_camera, params.W);
            break;
        case PoolStrategy::PerCellSensor:
            fwd.output = pool_per_cell(per_camera, params.w_cell);
            break;
        case PoolStrategy::IntrinsicEmbed:
            fwd.output = pool_intrinsic_embed(per_camera, params);
            break;
    }
    return fwd;
}

PoolGrads pool_backward(const CameraStack& per_camera, const PoolParams& params,
                        const PoolForward& fwd, const ChannelGrid& upstream) {
    check_stack(per_camera);
    const size_t nc = per_camera[0].size();
    const size_t kk = per_camera.size();
    const int nx = static_cast<int>(per_camera[0][0].rows());
    const int ny = static_cast<int>(per_camera[0][0].cols());
    if (upstream.size() != nc || upstream[0].rows() != nx || upstream[0].cols() != ny)
        throw ShapeError("pool_backward: upstream gradient shape mismatch");

    PoolGrads g;
    g.d_per_camera.assign(kk, zero_channels(static_cast<int>(nc), nx, ny));
    switch (params.strategy) {
        case PoolStrategy::Sum:
            for (size_t k = 0; k < kk; ++k)
                for (size_t c = 0; c < nc; ++c) g.d_per_camera[k][c] = upstream[c];
            break;
        case PoolStrategy::Mean:
            for (size_t k = 0; k < kk; ++k)
                for (size_t c = 0; c < nc; ++c)
                    g.d_per_camera[k][c] = upstream[c] / static_cast<double>(kk);
            break;
        case PoolStrategy::Max: {
            if (fwd.argmax.size() != nc)
                throw DomainError("pool_backward: missing retained argmax state");
            for (size_t c = 0; c < nc; ++c)
                for (int i = 0; i < nx; ++i)
                    for (int j = 0; j < ny; ++j)
                        g.d_per_camera[static_cast<size_t>(fwd.argmax[c](i, j))][c](i, j) =
                            upstream[c](i, j);
            break;
        }
        case PoolStrategy::WeightedSum:
            g.d_W.assign(kk, zero_channels(static_cast<int>(nc), nx, ny));
            for (size_t k = 0; k < kk; ++k)
                for (size_t c = 0; c < nc; ++c) {
                    g.d_W[k][c].array() = upstream[c].array() * per_camera[k][c].array();
                    g.d_per_camera[k][c].array() = upstream[c].array() * params.W[k][c].array();
                }
            break;
        case PoolStrategy::PerCellSensor:
            g.d_w_cell.assign(kk, Grid::Zero(nx, ny));
            for (size_t k = 0; k < kk; ++k)
                for (size_t c = 0; c < nc; ++c) {
                    g.d_w_cell[k].array() += upstream[c].array() * per_camera[k][c].array();
                    g.d_per_camera[k][c].array() = upstream[c].array() * params.w_cell[k].array();
                }
            break;
        case PoolStrategy::IntrinsicEmbed: {
            const Eigen::MatrixXd scales = params.scales();
            g.d_E.assign(kk, zero_channels(static_cast<int>(nc), nx, ny));
            g.d_mu = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(kk));
            Eigen::MatrixXd d_scales =
                Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(kk));
            for (size_t k = 0; k < kk; ++k)
                for (size_t c = 0; c < nc; ++c) {
                    const auto ci = static_cast<Eigen::Index>(c);
                    const auto ki = static_cast<Eigen::Index>(k);
                    g.d_E[k][c] = upstream[c];
                    g.d_per_camera[k][c] = scales(ci, ki) * upstream[c];
                    g.d_mu(ci, ki) = -scales(ci, ki) * upstream[c].sum();
                    d_scales(ci, ki) =
                        (upstream[c].array() * (per_camera[k][c].array() - params.mu(ci, ki)))
                            .sum();
                }
            g.d_intrinsic_bias = d_scales.rowwise().sum();
            g.d_intrinsic_map = d_scales * params.intrinsic_feats.transpose();
            break;
        }
    }
    return g;
}

}  // namespace fbev
