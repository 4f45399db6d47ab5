#include "fbev/scenesim.hpp"

#include <cmath>
#include <random>

namespace fbev {

bool OrientedBox::contains(double x, double y) const {
    const double dx = x - center.x();
    const double dy = y - center.y();
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    return std::abs(lx) <= length / 2.0 && std::abs(ly) <= width / 2.0;
}

SemClass ground_class(const Scene& scene, const SceneParams& params, double x, double y) {
    auto on_line = [&](double line_y, bool dashed) {
        if (std::abs(y - line_y) > params.marking_width / 2.0) return false;
        if (!dashed || params.marking_dash <= 0.0) return true;
        const double phase = x - scene.extent.x_min;
        return std::fmod(phase, params.marking_dash) < params.marking_dash / 2.0;
    };
    const double edge = params.road_half_width - 1.0;
    if (on_line(0.0, true) || on_line(edge, false) || on_line(-edge, false))
        return SemClass::Markings;
    if (std::abs(y) <= params.road_half_width) return SemClass::Street;
    return SemClass::Background;
}

Scene make_scene(const GridSpec& spec, uint64_t seed, const SceneParams& params) {
    spec.validate();
    Scene scene;
    scene.extent = spec;
    scene.seed = seed;
    scene.vehicle_height = params.vehicle_height;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double margin = 3.0;
    for (int v = 0; v < params.n_vehicles; ++v) {
        bool placed = false;
        for (int attempt = 0; attempt < params.max_retries && !placed; ++attempt) {
            OrientedBox box;
            box.center.x() = spec.x_min + margin + unit(rng) * (spec.x_max - spec.x_min - 2 * margin);
            box.center.y() = (unit(rng) * 2.0 - 1.0) * (params.road_half_width - 1.2);
            box.yaw = (unit(rng) - 0.5) * 0.8 + (unit(rng) < 0.5 ? 0.0 : M_PI);
            if (params.grid_aligned) {
                const double c = spec.cell;
                box.center.x() = std::round(box.center.x() / c) * c + c / 2.0;
                box.center.y() = std::round(box.center.y() / c) * c + c / 2.0;
                box.yaw = M_PI / 2.0 * std::floor(unit(rng) * 4.0);
            }
            if (box.center.norm() < params.min_vehicle_distance + box.length / 2.0) continue;
            bool clash = false;
            for (const auto& other : scene.vehicles)
                if ((other.center - box.center).norm() < 5.0) clash = true;
            if (clash) continue;
            scene.vehicles.push_back(box);
            placed = true;
        }
        if (!placed)
            throw ConfigError("make_scene: could not place vehicles within retry budget");
    }

    for (int w = 0; w < params.n_walls; ++w) {
        const double side = (w % 2 == 0) ? 1.0 : -1.0;
        const double y = side * (params.road_half_width + 1.0 +
                                 unit(rng) * std::max(0.5, spec.y_max - params.road_half_width - 2.0));
        const double len = 4.0 + unit(rng) * 6.0;
        const double x0 = spec.x_min + unit(rng) * (spec.x_max - spec.x_min - len);
        scene.occluders.push_back({Eigen::Vector2d(x0, y), Eigen::Vector2d(x0 + len, y), 2.5});
    }

    const int nx = spec.nx();
    const int ny = spec.ny();
    scene.semantic.resize(nx, ny);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const double x = spec.cell_center_x(i);
            const double y = spec.cell_center_y(j);
            SemClass cls = ground_class(scene, params, x, y);
            for (const auto& v : scene.vehicles)
                if (v.contains(x, y)) cls = SemClass::Vehicles;
            scene.semantic(i, j) = static_cast<int>(cls);
        }
    return scene;
}

namespace {

// Entry/exit parameters of a ray against an extruded oriented box.
// Returns false when the ray misses.
bool ray_prism(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const OrientedBox& box,
               double height, double& t_enter, double& t_exit) {
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    const double ox = c * (origin.x() - box.center.x()) + s * (origin.y() - box.center.y());
    const double oy = -s * (origin.x() - box.center.x()) + c * (origin.y() - box.center.y());
    const double dx = c * dir.x() + s * dir.y();
    const double dy = -s * dir.x() + c * dir.y();

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    auto slab = [&](double o, double d, double mn, double mx) {
        if (std::abs(d) < 1e-15) return o >= mn && o <= mx;
        double t0 = (mn - o) / d;
        double t1 = (mx - o) / d;
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
        return lo <= hi;
    };
    if (!slab(ox, dx, -box.length / 2.0, box.length / 2.0)) return false;
    if (!slab(oy, dy, -box.width / 2.0, box.width / 2.0)) return false;
    if (!slab(origin.z(), dir.z(), 0.0, height)) return false;
    t_enter = lo;
    t_exit = hi;
    return true;
}

bool ray_wall(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const Wall& wall,
              double& t_hit) {
    const Eigen::Vector2d e = wall.p1 - wall.p0;
    const double elen = e.norm();
    if (elen < 1e-12) return false;
    const Eigen::Vector2d n(e.y() / elen, -e.x() / elen);
    const double denom = n.x() * dir.x() + n.y() * dir.y();
    if (std::abs(denom) < 1e-15) return false;
    const double t = (n.x() * (wall.p0.x() - origin.x()) + n.y() * (wall.p0.y() - origin.y())) / denom;
    if (t <= 1e-9) return false;
    const double hx = origin.x() + t * dir.x();
    const double hy = origin.y() + t * dir.y();
    const double hz = origin.z() + t * dir.z();
    const double along = ((hx - wall.p0.x()) * e.x() + (hy - wall.p0.y()) * e.y()) / elen;
    if (along < 0.0 || along > elen) return false;
    if (hz < 0.0 || hz > wall.height) return false;
    t_hit = t;
    return true;
}

struct Hit {
    double t = kDepthMiss;
    SemClass cls = SemClass::Invalid;
};

Hit cast_ray(const Scene& scene, const SceneParams& params, const Eigen::Vector3d& origin,
             const Eigen::Vector3d& dir) {
    Hit best;
    if (dir.z() < -1e-12) {
        const double t = -origin.z() / dir.z();
        if (t > 1e-9) {
            best.t = t;
            best.cls = ground_class(scene, params, origin.x() + t * dir.x(),
                                    origin.y() + t * dir.y());
        }
    }
    for (const auto& v : scene.vehicles) {
        double t0, t1;
        if (ray_prism(origin, dir, v, scene.vehicle_height, t0, t1) && t1 > 1e-9) {
            const double t = std::max(t0, 1e-9);
            if (t < best.t) {
                best.t = t;
                best.cls = SemClass::Vehicles;
            }
        }
    }
    for (const auto& w : scene.occluders) {
        double t;
        if (ray_wall(origin, dir, w, t) && t < best.t) {
            best.t = t;
            best.cls = SemClass::Background;
        }
    }
    return best;
}

// Is the open segment origin -> target blocked by scene geometry?
// skip_vehicle exempts the prism the target sits on.
bool segment_blocked(const Scene& scene, const Eigen::Vector3d& origin,
                     const Eigen::Vector3d& target, int skip_vehicle) {
    const Eigen::Vector3d d = target - origin;
    const double eps = 1e-6;
    for (size_t i = 0; i < scene.vehicles.size(); ++i) {
        if (static_cast<int>(i) == skip_vehicle) continue;
        double t0, t1;
        if (ray_prism(origin, d, scene.vehicles[i], scene.vehicle_height, t0, t1))
            if (t1 > eps && t0 < 1.0 - eps) return true;
    }
    for (const auto& w : scene.occluders) {
        double t;
        if (ray_wall(origin, d, w, t) && t < 1.0 - eps) return true;
    }
    return false;
}

}  // namespace

RenderedView render_view(const Scene& scene, const SceneParams& params, const RigCamera& cam,
                         int camera_index) {
    if (cam.extrinsics.translation.z() <= 0.0)
        throw ConfigError("render_view: camera must be above the ground plane");
    const int h = cam.intrinsics.height;
    const int w = cam.intrinsics.width;
    RenderedView view;
    view.camera = camera_index;
    view.semantic = GridI::Constant(h, w, static_cast<int>(SemClass::Invalid));
    view.depth = Grid::Constant(h, w, kDepthMiss);
    const Eigen::Vector3d origin = cam.extrinsics.translation;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const auto ray = try_pixel_to_ray(cam.intrinsics, j, i);
            if (!ray) continue;
            const Eigen::Vector3d dir = cam.extrinsics.rotation * (*ray);
            const Hit hit = cast_ray(scene, params, origin, dir);
            if (hit.cls == SemClass::Invalid) continue;
            view.semantic(i, j) = static_cast<int>(hit.cls);
            view.depth(i, j) = hit.t;
        }
    return view;
}

std::vector<RenderedView> render_views(const Scene& scene, const SceneParams& params,
                                       const std::vector<RigCamera>& rig) {
    std::vector<RenderedView> views;
    views.reserve(rig.size());
    for (size_t k = 0; k < rig.size(); ++k)
        views.push_back(render_view(scene, params, rig[k], static_cast<int>(k)));
    return views;
}

static bool point_in_fov(const RigCamera& cam, const Eigen::Vector3d& point) {
    const Eigen::Vector3d pc =
        cam.extrinsics.rotation.transpose() * (point - cam.extrinsics.translation);
    const double norm = pc.norm();
    if (norm < 1e-9) return false;
    const double theta = std::acos(std::clamp(pc.z() / norm, -1.0, 1.0));
    if (theta >= cam.intrinsics.model.theta_max) return false;
    const auto px = ray_to_pixel(cam.intrinsics, pc);
    if (!px) return false;
    return px->x() >= 0.0 && px->x() <= cam.intrinsics.width - 1.0 && px->y() >= 0.0 &&
           px->y() <= cam.intrinsics.height - 1.0;
}

GtOcclusion gt_occlusion(const Scene& scene, const std::vector<RigCamera>& rig,
                         const GridSpec& spec, int subsamples) {
    const int nx = spec.nx();
    const int ny = spec.ny();
    GtOcclusion gt;
    gt.visibility = Grid::Zero(nx, ny);
    std::vector<bool> vehicle_seen(scene.vehicles.size(), false);

    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            int visible = 0;
            for (int si = 0; si < subsamples; ++si)
                for (int sj = 0; sj < subsamples; ++sj) {
                    const double x = spec.x_min + (i + (si + 0.5) / subsamples) * spec.cell;
                    const double y = spec.y_min + (j + (sj + 0.5) / subsamples) * spec.cell;
                    int owner = -1;
                    for (size_t v = 0; v < scene.vehicles.size(); ++v)
                        if (scene.vehicles[v].contains(x, y)) {
                            owner = static_cast<int>(v);
                            break;
                        }
                    const Eigen::Vector3d target(x, y,
                                                 owner >= 0 ? scene.vehicle_height : 0.0);
                    bool seen = false;
                    for (const auto& cam : rig) {
                        if (!point_in_fov(cam, target)) continue;
                        if (!segment_blocked(scene, cam.extrinsics.translation, target, owner)) {
                            seen = true;
                            break;
                        }
                    }
                    if (seen) {
                        ++visible;
                        if (owner >= 0) vehicle_seen[static_cast<size_t>(owner)] = true;
                    }
                }
            gt.visibility(i, j) =
                static_cast<double>(visible) / static_cast<double>(subsamples * subsamples);
        }

    // Partially seen vehicles become fully visible over their footprint.
    for (size_t v = 0; v < scene.vehicles.size(); ++v) {
        if (!vehicle_seen[v]) continue;
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j)
                if (scene.vehicles[v].contains(spec.cell_center_x(i), spec.cell_center_y(j)))
                    gt.visibility(i, j) = 1.0;
    }
    gt.occupied = gt.visibility.array() >= 0.5;
    return gt;
}

static int feature_stride(int image, int feat, const char* what) {
    if (feat < 1 || image % feat != 0)
        throw ConfigError(std::string("scenesim: feature size does not divide ") + what);
    return image / feat;
}

Eigen::MatrixXd gt_depth_distribution(const RenderedView& view, const DepthBins& bins, int hf,
                                      int wf, Eigen::Index* clamped_out) {
    bins.validate();
    const int sy = feature_stride(static_cast<int>(view.depth.rows()), hf, "height");
    const int sx = feature_stride(static_cast<int>(view.depth.cols()), wf, "width");
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(bins.count(), static_cast<Eigen::Index>(hf) * wf);
    Eigen::Index clamped = 0;
    for (int i = 0; i < hf; ++i)
        for (int j = 0; j < wf; ++j) {
            const int r = static_cast<int>(std::lround((i + 0.5) * sy - 0.5));
            const int c = static_cast<int>(std::lround((j + 0.5) * sx - 0.5));
            const auto [bin, was_clamped] = bins.bin_of(view.depth(r, c));
            if (bin < 0) continue;
            dist(bin, static_cast<Eigen::Index>(i) * wf + j) = 1.0;
            if (was_clamped) ++clamped;
        }
    if (clamped_out) *clamped_out = clamped;
    return dist;
}

Eigen::MatrixXd semantic_features(const RenderedView& view, int hf, int wf) {
    const int sy = feature_stride(static_cast<int>(view.semantic.rows()), hf, "height");
    const int sx = feature_stride(static_cast<int>(view.semantic.cols()), wf, "width");
    Eigen::MatrixXd feats =
        Eigen::MatrixXd::Zero(kNumClasses, static_cast<Eigen::Index>(hf) * wf);
    for (int i = 0; i < hf; ++i)
        for (int j = 0; j < wf; ++j) {
            const int r = static_cast<int>(std::lround((i + 0.5) * sy - 0.5));
            const int c = static_cast<int>(std::lround((j + 0.5) * sx - 0.5));
            feats(view.semantic(r, c), static_cast<Eigen::Index>(i) * wf + j) = 1.0;
        }
    return feats;
}

std::vector<RigCamera> default_rig(int width, int height, double a1, double cam_height,
                                   double pitch_down) {
    DistortionModel model = make_polynomial(Eigen::Vector4d(a1, 0.0, -a1 / 25.0, 0.0), 1.9);

    CameraIntrinsics intr;
    intr.model = model;
    intr.width = width;
    intr.height = height;
    intr.cx = (width - 1) / 2.0;
    intr.cy = (height - 1) / 2.0;
    intr.validate();

    // Camera looking along vehicle +x with zero pitch: x_cam = -y_veh,
    // y_cam = -z_veh, z_cam = +x_veh.
    Eigen::Matrix3d base;
    base << 0, 0, 1, -1, 0, 0, 0, -1, 0;
    const Eigen::Matrix3d pitch =
        Eigen::AngleAxisd(-pitch_down, Eigen::Vector3d::UnitX()).toRotationMatrix();

    struct Mount {
        const char* name;
        double yaw;
        Eigen::Vector3d offset;
    };
    const std::vector<Mount> mounts = {
        {"front", 0.0, {1.2, 0.0, 0.0}},
        {"left", M_PI / 2.0, {0.0, 0.9, 0.0}},
        {"back", M_PI, {-1.2, 0.0, 0.0}},
        {"right", -M_PI / 2.0, {0.0, -0.9, 0.0}},
    };

    std::vector<RigCamera> rig;
    for (const auto& m : mounts) {
        RigCamera cam;
        cam.name = m.name;
        cam.intrinsics = intr;
        cam.extrinsics.rotation =
            Eigen::AngleAxisd(m.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix() * base * pitch;
        cam.extrinsics.translation = m.offset + Eigen::Vector3d(0.0, 0.0, cam_height);
        cam.extrinsics.validate();
        rig.push_back(cam);
    }
    return rig;
}

}  // namespace fbev
