// Command-line front end: calibration ingestion, pipeline execution, image and
// report export. Exit codes: 0 success, 2 validation/config/data error,
// 3 numeric error.

#include "fbev/learn.hpp"
#include "fbev/lift.hpp"
#include "fbev/loss.hpp"
#include "fbev/metrics.hpp"
#include "fbev/occlusion.hpp"
#include "fbev/pool.hpp"
#include "fbev/rig_io.hpp"
#include "fbev/scenesim.hpp"
#include "fbev/tensor_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace fbev;

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory: " + dir);
}

Rig default_demo_rig() {
    Rig rig;
    rig.grid = {-10.0, 10.0, -10.0, 10.0, 0.5};
    rig.bins = {0.5, 16.0, 0.125};
    rig.cameras = default_rig();
    return rig;
}

SceneParams demo_scene_params(int vehicles, int walls, bool aligned) {
    SceneParams p;
    p.n_vehicles = vehicles;
    p.n_walls = walls;
    p.grid_aligned = aligned;
    if (aligned) p.marking_width = 1.0;
    return p;
}

struct DemoOutput {
    GridI pred_class;
    Grid pred_visibility;
    GridI counts_total;
    EvalReport report;
    Scene scene;
    GtOcclusion gt;
};

// Feature/depth matrices at feature resolution from a (possibly rectified)
// class-id + depth raster.
void matrices_from_raster(const GridI& classes, const Grid& depth, int hf, int wf,
                          const DepthBins& bins, Eigen::MatrixXd& feats,
                          Eigen::MatrixXd& depth_dist) {
    const int sy = static_cast<int>(classes.rows()) / hf;
    const int sx = static_cast<int>(classes.cols()) / wf;
    feats = Eigen::MatrixXd::Zero(kNumClasses, static_cast<Eigen::Index>(hf) * wf);
    depth_dist = Eigen::MatrixXd::Zero(bins.count(), static_cast<Eigen::Index>(hf) * wf);
    for (int i = 0; i < hf; ++i)
        for (int j = 0; j < wf; ++j) {
            const int r = static_cast<int>(std::lround((i + 0.5) * sy - 0.5));
            const int c = static_cast<int>(std::lround((j + 0.5) * sx - 0.5));
            const Eigen::Index p = static_cast<Eigen::Index>(i) * wf + j;
            feats(classes(r, c), p) = 1.0;
            const auto [bin, clamped] = bins.bin_of(depth(r, c));
            (void)clamped;
            if (bin >= 0) depth_dist(bin, p) = 1.0;
        }
}

DemoOutput run_demo(const Rig& rig, uint64_t seed, const SceneParams& sparams, int stride,
                    bool rectify, int workers, int kernel_radius, double tau) {
    DemoOutput out;
    out.scene = make_scene(rig.grid, seed, sparams);

    std::vector<LiftedPoints> parts;
    for (size_t k = 0; k < rig.cameras.size(); ++k) {
        const RigCamera& cam = rig.cameras[k];
        const RenderedView view = render_view(out.scene, sparams, cam, static_cast<int>(k));
        Eigen::MatrixXd feats, depth_dist;
        RayGrid rays;
        if (rectify) {
            // Baseline path: cylindrical rectification before lifting.
            CylindricalConfig cfg;
            cfg.width = cam.intrinsics.width;
            cfg.height = cam.intrinsics.height;
            cfg.resample = Resample::Nearest;
            Image src;
            src.channels = {view.semantic.cast<double>().matrix(), view.depth};
            cfg.fill = static_cast<double>(SemClass::Invalid);
            const RectifyResult rect = cylindrical_rectify(cam.intrinsics, src, cfg);
            GridI rect_class = rect.image.channels[0].cast<int>();
            Grid rect_depth = rect.image.channels[1];
            for (int i = 0; i < cfg.height; ++i)
                for (int j = 0; j < cfg.width; ++j)
                    if (!rect.valid(i, j)) {
                        rect_class(i, j) = static_cast<int>(SemClass::Invalid);
                        rect_depth(i, j) = kDepthMiss;
                    }
            const int hf = cfg.height / stride;
            const int wf = cfg.width / stride;
            matrices_from_raster(rect_class, rect_depth, hf, wf, rig.bins, feats, depth_dist);
            rays = build_cylindrical_ray_grid(rect.intrinsics, hf, wf);
        } else {
            const int hf = cam.intrinsics.height / stride;
            const int wf = cam.intrinsics.width / stride;
            feats = semantic_features(view, hf, wf);
            depth_dist = gt_depth_distribution(view, rig.bins, hf, wf);
            rays = build_ray_grid(cam.intrinsics, hf, wf);
        }
        LiftedPoints pts = lift_points(rays, cam.extrinsics, rig.bins, feats, depth_dist,
                                       static_cast<int>(k), /*keep_zero_weight=*/false);
        if (pts.size() == 0)
            std::cerr << "warning: camera '" << cam.name << "' produced no lifted points\n";
        parts.push_back(std::move(pts));
    }

    const auto grids = splat(concat(parts), rig.grid, Reduce::Sum,
                             static_cast<int>(rig.cameras.size()), nullptr, workers);
    CameraStack stack;
    for (const auto& g : grids) stack.push_back(g.features);
    PoolParams params;
    params.strategy = PoolStrategy::Sum;
    const ChannelGrid merged = pool_forward(stack, params).output;

    const int nx = rig.grid.nx();
    const int ny = rig.grid.ny();
    out.counts_total = GridI::Zero(nx, ny);
    for (const auto& g : grids) out.counts_total += g.counts;

    out.pred_class = GridI::Constant(nx, ny, static_cast<int>(SemClass::Invalid));
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            if (out.counts_total(i, j) == 0) continue;
            int best = 0;
            for (int c = 1; c < kNumClasses; ++c)
                if (merged[static_cast<size_t>(c)](i, j) > merged[static_cast<size_t>(best)](i, j))
                    best = c;
            out.pred_class(i, j) = best;
        }

    const OcclusionMap occl = occlusion_map(out.counts_total, kernel_radius, tau);
    out.pred_visibility = occupancy(occl.p_occluded);
    out.gt = gt_occlusion(out.scene, rig.cameras, rig.grid);
    out.report = evaluate(out.pred_class, out.pred_visibility, out.scene.semantic,
                          out.gt.visibility);
    return out;
}

std::string format_report(const EvalReport& r) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed;
    os << "class            iou\n";
    os << "occlusion      " << r.iou_occlusion << "\n";
    os << "vehicles       " << r.iou_per_class.at(SemClass::Vehicles) << "\n";
    os << "markings       " << r.iou_per_class.at(SemClass::Markings) << "\n";
    os << "street         " << r.iou_per_class.at(SemClass::Street) << "\n";
    os << "background     " << r.iou_per_class.at(SemClass::Background) << "\n";
    os << "miou           " << r.miou << "\n";
    os << "visible_frac   " << r.visible_cell_fraction << "\n";
    return os.str();
}

std::string format_report_kv(const EvalReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "iou_occlusion = " << r.iou_occlusion << "\n";
    os << "iou_vehicles = " << r.iou_per_class.at(SemClass::Vehicles) << "\n";
    os << "iou_markings = " << r.iou_per_class.at(SemClass::Markings) << "\n";
    os << "iou_street = " << r.iou_per_class.at(SemClass::Street) << "\n";
    os << "iou_background = " << r.iou_per_class.at(SemClass::Background) << "\n";
    os << "miou = " << r.miou << "\n";
    os << "visible_cell_fraction = " << r.visible_cell_fraction << "\n";
    return os.str();
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

int cmd_project(const std::string& rig_path, const std::vector<std::string>& feature_files,
                const std::vector<std::string>& depth_files, const std::string& out_dir) {
    const Rig rig = load_rig(rig_path);
    if (feature_files.size() != rig.cameras.size() || depth_files.size() != rig.cameras.size())
        throw ConfigError("project: need one --features and one --depth file per rig camera");
    ensure_dir(out_dir);

    std::vector<LiftedPoints> parts;
    for (size_t k = 0; k < rig.cameras.size(); ++k) {
        const RigCamera& cam = rig.cameras[k];
        const Tensor ft = load_tensor(feature_files[k]);
        const Tensor dt = load_tensor(depth_files[k]);
        if (ft.dims.size() != 3) throw DataError("project: feature tensor must be rank 3 (C,Hf,Wf)");
        if (dt.dims.size() != 3) throw DataError("project: depth tensor must be rank 3 (D,Hf,Wf)");
        const int hf = static_cast<int>(ft.dims[1]);
        const int wf = static_cast<int>(ft.dims[2]);
        if (static_cast<int>(dt.dims[1]) != hf || static_cast<int>(dt.dims[2]) != wf)
            throw ShapeError("project: feature and depth tensors disagree on feature size");

        const auto fv = ft.as_f64();
        const auto dv = dt.as_f64();
        const Eigen::Index npix = static_cast<Eigen::Index>(hf) * wf;
        Eigen::MatrixXd feats(ft.dims[0], npix);
        for (uint32_t c = 0; c < ft.dims[0]; ++c)
            for (Eigen::Index p = 0; p < npix; ++p)
                feats(c, p) = fv[c * static_cast<size_t>(npix) + static_cast<size_t>(p)];
        Eigen::MatrixXd depth_dist(dt.dims[0], npix);
        for (uint32_t d = 0; d < dt.dims[0]; ++d)
            for (Eigen::Index p = 0; p < npix; ++p)
                depth_dist(d, p) = dv[d * static_cast<size_t>(npix) + static_cast<size_t>(p)];

        const RayGrid rays = build_ray_grid(cam.intrinsics, hf, wf);
        if (rays.valid.count() == 0)
            std::cerr << "warning: camera '" << cam.name << "' has no in-FOV feature cells\n";

        std::vector<double> dirs;
        std::vector<uint8_t> valid;
        dirs.reserve(3 * static_cast<size_t>(npix));
        for (int axis = 0; axis < 3; ++axis)
            for (Eigen::Index p = 0; p < npix; ++p) dirs.push_back(rays.dirs(axis, p));
        for (int i = 0; i < hf; ++i)
            for (int j = 0; j < wf; ++j) valid.push_back(rays.valid(i, j) ? 1 : 0);
        save_tensor(join_path(out_dir, "rays_" + cam.name + ".fbvt"),
                    tensor_f64({3, static_cast<uint32_t>(hf), static_cast<uint32_t>(wf)}, dirs));
        save_tensor(join_path(out_dir, "valid_" + cam.name + ".fbvt"),
                    tensor_u8({static_cast<uint32_t>(hf), static_cast<uint32_t>(wf)}, valid));

        parts.push_back(lift_points(rays, cam.extrinsics, rig.bins, feats, depth_dist,
                                    static_cast<int>(k)));
    }
    const LiftedPoints pts = concat(parts);
    const uint32_t n = static_cast<uint32_t>(pts.size());

    std::vector<double> pos, feat;
    for (Eigen::Index i = 0; i < pts.size(); ++i)
        for (int a = 0; a < 3; ++a) pos.push_back(pts.positions(a, i));
    for (Eigen::Index i = 0; i < pts.size(); ++i)
        for (Eigen::Index c = 0; c < pts.features.rows(); ++c) feat.push_back(pts.features(c, i));
    std::vector<int32_t> cam_id(pts.camera_id.data(), pts.camera_id.data() + pts.size());
    std::vector<int32_t> pix_id(pts.pixel_id.data(), pts.pixel_id.data() + pts.size());
    std::vector<int32_t> bin_id(pts.bin_id.data(), pts.bin_id.data() + pts.size());
    save_tensor(join_path(out_dir, "positions.fbvt"), tensor_f64({n, 3}, pos));
    save_tensor(join_path(out_dir, "features.fbvt"),
                tensor_f64({n, static_cast<uint32_t>(pts.features.rows())}, feat));
    save_tensor(join_path(out_dir, "camera_id.fbvt"), tensor_i32({n}, cam_id));
    save_tensor(join_path(out_dir, "pixel_id.fbvt"), tensor_i32({n}, pix_id));
    save_tensor(join_path(out_dir, "bin_id.fbvt"), tensor_i32({n}, bin_id));
    return 0;
}

int cmd_pool(const std::string& grids_path, const std::string& strategy_name,
             const std::string& weights_path, const std::string& counts_path,
             const std::string& out_path, const std::string& pgm_path) {
    const PoolStrategy strategy = pool_strategy_from_string(strategy_name);
    const CameraStack stack = stack_from_tensor(load_tensor(grids_path));

    PoolParams params;
    params.strategy = strategy;
    const size_t kk = stack.size();
    const size_t cc = stack[0].size();
    const int nx = static_cast<int>(stack[0][0].rows());
    const int ny = static_cast<int>(stack[0][0].cols());

    if (strategy == PoolStrategy::WeightedSum) {
        if (!weights_path.empty())
            params.W = stack_from_tensor(load_tensor(weights_path));
        else
            params.W.assign(kk, ChannelGrid(cc, Grid::Ones(nx, ny)));
    } else if (strategy == PoolStrategy::PerCellSensor) {
        if (!weights_path.empty()) {
            params.w_cell = channels_from_tensor(load_tensor(weights_path));
        } else if (!counts_path.empty()) {
            const ChannelGrid counts = channels_from_tensor(load_tensor(counts_path));
            std::vector<BevGrid> grids(kk);
            for (size_t k = 0; k < kk; ++k) {
                grids[k].features = stack[k];
                grids[k].counts = counts[k].cast<int>();
            }
            params.w_cell = per_cell_init_weights(grids);
        } else {
            throw ConfigError("pool: per_cell_sensor needs --weights or --counts");
        }
    } else if (strategy == PoolStrategy::IntrinsicEmbed) {
        params.E.assign(kk, zero_channels(static_cast<int>(cc), nx, ny));
        if (!weights_path.empty()) {
            const CameraStack e = stack_from_tensor(load_tensor(weights_path));
            params.E = e;
        }
        params.mu = calibrate_mu(stack);
        params.intrinsic_map = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cc), 10);
        params.intrinsic_bias = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cc));
        params.intrinsic_feats = Eigen::MatrixXd::Zero(10, static_cast<Eigen::Index>(kk));
    }

    const ChannelGrid pooled = pool_forward(stack, params).output;
    save_tensor(out_path, tensor_from_channels(pooled));
    if (!pgm_path.empty()) {
        // Grayscale render of the channel-sum magnitude.
        Grid mag = Grid::Zero(nx, ny);
        for (const auto& g : pooled) mag += g.cwiseAbs();
        const double peak = std::max(1e-12, mag.maxCoeff());
        write_pgm(pgm_path, mag / peak);
    }
    return 0;
}

int cmd_eval(const std::vector<double>& scores, const std::string& pred_class_path,
             const std::string& pred_vis_path, const std::string& gt_class_path,
             const std::string& gt_vis_path, const std::string& out_path) {
    if (!scores.empty()) {
        if (scores.size() != 5)
            throw ConfigError("eval: --scores takes exactly five IoU values");
        const double m = miou_from_scores(scores[0], scores[1], scores[2], scores[3], scores[4]);
        std::cout.precision(4);
        std::cout << std::fixed << "miou " << m << "\n";
        return 0;
    }
    if (pred_class_path.empty() || gt_class_path.empty())
        throw ConfigError("eval: need --pred-class and --gt-class (or --scores)");
    const GridI pred_class = grid_i_from_tensor(load_tensor(pred_class_path));
    const GridI gt_class = grid_i_from_tensor(load_tensor(gt_class_path));
    const Grid pred_vis = pred_vis_path.empty()
                              ? Grid::Ones(pred_class.rows(), pred_class.cols())
                              : grid_from_tensor(load_tensor(pred_vis_path));
    const Grid gt_vis = gt_vis_path.empty() ? Grid::Ones(gt_class.rows(), gt_class.cols())
                                            : grid_from_tensor(load_tensor(gt_vis_path));
    const EvalReport rep = evaluate(pred_class, pred_vis, gt_class, gt_vis);
    std::cout << format_report(rep);
    if (!out_path.empty()) atomic_write(out_path, format_report_kv(rep));
    return 0;
}

int cmd_demo(uint64_t seed, const std::string& rig_path, const std::string& out_dir, bool rectify,
             int workers, int stride, int vehicles, int walls, int kernel_radius, double tau,
             bool aligned) {
    const Rig rig = rig_path.empty() ? default_demo_rig() : load_rig(rig_path);
    ensure_dir(out_dir);
    const SceneParams sparams = demo_scene_params(vehicles, walls, aligned);
    const DemoOutput out =
        run_demo(rig, seed, sparams, stride, rectify, workers, kernel_radius, tau);

    write_ppm_semantic(join_path(out_dir, "semantic.ppm"), out.pred_class);
    write_ppm_semantic(join_path(out_dir, "gt_semantic.ppm"), out.scene.semantic);
    // Occluded = black, per the report-figure convention.
    write_pgm(join_path(out_dir, "occlusion.pgm"), out.pred_visibility);
    save_tensor(join_path(out_dir, "pred_class.fbvt"), tensor_from_grid(out.pred_class));
    save_tensor(join_path(out_dir, "pred_visibility.fbvt"),
                tensor_from_grid(out.pred_visibility));
    save_tensor(join_path(out_dir, "gt_visibility.fbvt"), tensor_from_grid(out.gt.visibility));
    save_tensor(join_path(out_dir, "counts.fbvt"), tensor_from_grid(out.counts_total));
    atomic_write(join_path(out_dir, "report.txt"), format_report(out.report));
    atomic_write(join_path(out_dir, "report.kv"), format_report_kv(out.report));
    std::cout << format_report(out.report);
    return 0;
}

int cmd_train(int steps, double lr, const std::string& optimizer_name,
              const std::string& strategy_name, uint64_t seed, int scenes, int noisy_camera,
              double noise_scale, const std::string& out_dir, const std::string& resume_dir) {
    TrainConfig cfg;
    cfg.steps = steps;
    cfg.lr = lr;
    cfg.optimizer = optimizer_from_string(optimizer_name);
    cfg.strategy = pool_strategy_from_string(strategy_name);
    cfg.seed = seed;
    ensure_dir(out_dir);

    // Desk-scale fixture: small rig, small grid, ground-truth depth.
    const GridSpec spec{-8.0, 8.0, -8.0, 8.0, 0.5};
    const DepthBins bins{0.5, 12.0, 0.25};
    const auto rig = default_rig(320, 200, 50.0, 2.2, 0.7);
    SceneParams sparams;
    sparams.n_vehicles = 3;
    sparams.n_walls = 1;

    std::vector<FrameData> frames;
    std::vector<CameraIntrinsics> intrinsics;
    for (const auto& cam : rig) intrinsics.push_back(cam.intrinsics);
    for (int s = 0; s < scenes; ++s) {
        const Scene scene = make_scene(spec, seed + static_cast<uint64_t>(s), sparams);
        frames.push_back(make_frame(scene, sparams, rig, spec, bins, 2, noisy_camera, noise_scale,
                                    seed * 1000 + static_cast<uint64_t>(s)));
    }

    std::ostringstream cfg_text;
    cfg_text << to_string(cfg.strategy) << "|" << optimizer_name << "|" << lr << "|" << seed << "|"
             << scenes << "|" << noisy_camera << "|" << noise_scale;
    const uint64_t cfg_hash = fnv1a(cfg_text.str());

    TrainState state;
    if (!resume_dir.empty()) {
        state.pool = init_pool_params(cfg.strategy, frames, intrinsics);
        state.head = init_head(cfg.num_classes,
                               static_cast<int>(frames[0].per_camera[0].features.size()));
        const auto params = load_tensor(join_path(resume_dir, "params.fbvt")).as_f64();
        Eigen::VectorXd v =
            Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
        unflatten_params(v, state.pool, state.head);
        std::ifstream mf(join_path(resume_dir, "manifest.kv"));
        if (!mf) throw DataError("train: cannot open resume manifest");
        std::string line;
        uint64_t saved_hash = 0;
        while (std::getline(mf, line)) {
            std::istringstream ls(line);
            std::string key, eq;
            ls >> key >> eq;
            if (key == "step") ls >> state.step;
            if (key == "config_hash") ls >> saved_hash;
        }
        if (saved_hash != cfg_hash)
            throw ConfigError("train: resume checkpoint was created with a different config");
        const auto m = load_tensor(join_path(resume_dir, "adam_m.fbvt")).as_f64();
        const auto vv = load_tensor(join_path(resume_dir, "adam_v.fbvt")).as_f64();
        if (!m.empty()) {
            state.adam_m = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
            state.adam_v = Eigen::Map<const Eigen::VectorXd>(vv.data(), static_cast<Eigen::Index>(vv.size()));
        }
        state.rng_seed = seed;
        train_continue(state, frames, cfg);
    } else {
        state = train(frames, cfg, intrinsics);
    }

    const Eigen::VectorXd params = flatten_params(state.pool, state.head);
    save_tensor(join_path(out_dir, "params.fbvt"),
                tensor_f64({static_cast<uint32_t>(params.size())},
                           std::vector<double>(params.data(), params.data() + params.size())));
    const Eigen::VectorXd am = state.adam_m.size() ? state.adam_m : Eigen::VectorXd::Zero(0);
    save_tensor(join_path(out_dir, "adam_m.fbvt"),
                tensor_f64({static_cast<uint32_t>(std::max<Eigen::Index>(am.size(), 1))},
                           am.size() ? std::vector<double>(am.data(), am.data() + am.size())
                                     : std::vector<double>{0.0}));
    const Eigen::VectorXd av = state.adam_v.size() ? state.adam_v : Eigen::VectorXd::Zero(0);
    save_tensor(join_path(out_dir, "adam_v.fbvt"),
                tensor_f64({static_cast<uint32_t>(std::max<Eigen::Index>(av.size(), 1))},
                           av.size() ? std::vector<double>(av.data(), av.data() + av.size())
                                     : std::vector<double>{0.0}));

    std::ostringstream manifest;
    manifest << "step = " << state.step << "\n";
    manifest << "seed = " << seed << "\n";
    manifest << "config_hash = " << cfg_hash << "\n";
    atomic_write(join_path(out_dir, "manifest.kv"), manifest.str());

    std::ostringstream curve;
    curve.precision(17);
    for (size_t i = 0; i < state.loss_history.size(); ++i)
        curve << i << " " << state.loss_history[i] << "\n";
    atomic_write(join_path(out_dir, "loss_curve.txt"), curve.str());
    std::cout << "final_loss " << state.loss_history.back() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fisheye BEV projection engine"};
    app.require_subcommand(1);

    // project
    auto* project = app.add_subcommand("project", "lift image tensors through a rig");
    std::string rig_path, out_dir = "out";
    std::vector<std::string> feature_files, depth_files;
    project->add_option("--rig", rig_path)->required();
    project->add_option("--features", feature_files)->required();
    project->add_option("--depth", depth_files)->required();
    project->add_option("--out-dir", out_dir);

    // pool
    auto* pool_cmd = app.add_subcommand("pool", "merge per-camera BEV grids");
    std::string grids_path, strategy = "sum", weights_path, counts_path, pool_out = "pooled.fbvt",
                pgm_path;
    pool_cmd->add_option("--grids", grids_path)->required();
    pool_cmd->add_option("--strategy", strategy);
    pool_cmd->add_option("--weights", weights_path);
    pool_cmd->add_option("--counts", counts_path);
    pool_cmd->add_option("--out", pool_out);
    pool_cmd->add_option("--pgm", pgm_path);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "IoU / mIoU evaluation");
    std::vector<double> scores;
    std::string pred_class_path, pred_vis_path, gt_class_path, gt_vis_path, report_path;
    eval_cmd->add_option("--scores", scores);
    eval_cmd->add_option("--pred-class", pred_class_path);
    eval_cmd->add_option("--pred-vis", pred_vis_path);
    eval_cmd->add_option("--gt-class", gt_class_path);
    eval_cmd->add_option("--gt-vis", gt_vis_path);
    eval_cmd->add_option("--out", report_path);

    // demo
    auto* demo_cmd = app.add_subcommand("demo", "end-to-end synthetic pipeline");
    uint64_t seed = 0;
    bool rectify = false;
    int workers = 1, stride = 2, vehicles = 6, walls = 2, kernel_radius = 1;
    double tau = 4.0;
    std::string demo_rig_path, demo_out = "demo_out";
    demo_cmd->add_option("--seed", seed);
    demo_cmd->add_option("--rig", demo_rig_path);
    demo_cmd->add_option("--out-dir", demo_out);
    demo_cmd->add_flag("--rectify", rectify);
    demo_cmd->add_option("--workers", workers);
    demo_cmd->add_option("--stride", stride);
    demo_cmd->add_option("--vehicles", vehicles);
    demo_cmd->add_option("--walls", walls);
    demo_cmd->add_option("--kernel-radius", kernel_radius);
    demo_cmd->add_option("--tau", tau);
    bool aligned = false;
    demo_cmd->add_flag("--aligned", aligned);

    // train
    auto* train_cmd = app.add_subcommand("train", "fit pooling parameters and heads");
    int steps = 100, scenes = 4, noisy_camera = -1;
    double lr = 1e-2, noise_scale = 0.0;
    std::string optimizer = "adam", train_strategy = "per_cell_sensor", train_out = "train_out",
                resume_dir;
    uint64_t train_seed = 0;
    train_cmd->add_option("--steps", steps);
    train_cmd->add_option("--lr", lr);
    train_cmd->add_option("--optimizer", optimizer);
    train_cmd->add_option("--strategy", train_strategy);
    train_cmd->add_option("--seed", train_seed);
    train_cmd->add_option("--scenes", scenes);
    train_cmd->add_option("--noisy-camera", noisy_camera);
    train_cmd->add_option("--noise-scale", noise_scale);
    train_cmd->add_option("--out-dir", train_out);
    train_cmd->add_option("--resume", resume_dir);

    CLI11_PARSE(app, argc, argv);

    try {
        if (project->parsed())
            return cmd_project(rig_path, feature_files, depth_files, out_dir);
        if (pool_cmd->parsed())
            return cmd_pool(grids_path, strategy, weights_path, counts_path, pool_out, pgm_path);
        if (eval_cmd->parsed())
            return cmd_eval(scores, pred_class_path, pred_vis_path, gt_class_path, gt_vis_path,
                            report_path);
        if (demo_cmd->parsed())
            return cmd_demo(seed, demo_rig_path, demo_out, rectify, workers, stride, vehicles,
                            walls, kernel_radius, tau, aligned);
        if (train_cmd->parsed())
            return cmd_train(steps, lr, optimizer, train_strategy, train_seed, scenes,
                             noisy_camera, noise_scale, train_out, resume_dir);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
