#include "fbev/lift.hpp"

#include <cmath>
#include <sstream>

namespace fbev {

static int stride_for(int image_extent, int feature_extent, const char* axis) {
    if (feature_extent < 1 || image_extent % feature_extent != 0) {
        std::ostringstream os;
        os << "build_ray_grid: feature size " << feature_extent << " does not divide image "
           << axis << " extent " << image_extent;
        throw ConfigError(os.str());
    }
    return image_extent / feature_extent;
}

RayGrid build_ray_grid(const CameraIntrinsics& intr, int hf, int wf) {
    const int sy = stride_for(intr.height, hf, "y");
    const int sx = stride_for(intr.width, wf, "x");
    if (sx != sy) throw ConfigError("build_ray_grid: non-square stride");

    RayGrid g;
    g.hf = hf;
    g.wf = wf;
    g.stride = sx;
    g.dirs.resize(3, static_cast<Eigen::Index>(hf) * wf);
    g.valid = GridB::Constant(hf, wf, false);
    for (int i = 0; i < hf; ++i) {
        const double v = (i + 0.5) * sy - 0.5;
        for (int j = 0; j < wf; ++j) {
            const double u = (j + 0.5) * sx - 0.5;
            const Eigen::Index p = static_cast<Eigen::Index>(i) * wf + j;
            if (auto ray = try_pixel_to_ray(intr, u, v)) {
                g.dirs.col(p) = *ray;
                g.valid(i, j) = true;
            } else {
                g.dirs.col(p).setZero();
            }
        }
    }
    return g;
}

RayGrid build_cylindrical_ray_grid(const CylindricalIntrinsics& cyl, int hf, int wf) {
    const int sy = stride_for(cyl.height, hf, "y");
    const int sx = stride_for(cyl.width, wf, "x");
    if (sx != sy) throw ConfigError("build_ray_grid: non-square stride");

    RayGrid g;
    g.hf = hf;
    g.wf = wf;
    g.stride = sx;
    g.dirs.resize(3, static_cast<Eigen::Index>(hf) * wf);
    g.valid = GridB::Constant(hf, wf, true);
    for (int i = 0; i < hf; ++i) {
        const double v = (i + 0.5) * sy - 0.5;
        for (int j = 0; j < wf; ++j) {
            const double u = (j + 0.5) * sx - 0.5;
            g.dirs.col(static_cast<Eigen::Index>(i) * wf + j) = cylindrical_ray(cyl, u, v);
        }
    }
    return g;
}

void DepthBins::validate() const {
    if (d_min <= 0.0) throw ConfigError("DepthBins: d_min must be positive");
    if (step <= 0.0) throw ConfigError("DepthBins: step must be positive");
    if (count() < 1) throw ConfigError("DepthBins: empty bin range");
}

Eigen::VectorXd DepthBins::centers() const {
    const int n = count();
    Eigen::VectorXd c(n);
    for (int k = 0; k < n; ++k) c[k] = center(k);
    return c;
}

std::pair<int, bool> DepthBins::bin_of(double depth) const {
    if (!std::isfinite(depth) || depth < d_min) return {-1, false};
    const int n = count();
    const int k = static_cast<int>(std::floor((depth - d_min) / step));
    if (k >= n) return {n - 1, true};
    return {k, false};
}

LiftedPoints lift_points(const RayGrid& rays, const CameraExtrinsics& extr, const DepthBins& bins,
                         const Eigen::MatrixXd& features, const Eigen::MatrixXd& depth_dist,
                         int camera_id, bool keep_zero_weight) {
    bins.validate();
    const Eigen::Index npix = static_cast<Eigen::Index>(rays.hf) * rays.wf;
    const int nd = bins.count();
    if (features.cols() != npix)
        throw ShapeError("lift_points: feature columns do not match the ray grid");
    if (depth_dist.cols() != npix || depth_dist.rows() != nd)
        throw ShapeError("lift_points: depth distribution shape mismatch");
    if ((depth_dist.array() < 0.0).any())
        throw DomainError("lift_points: negative depth weight");

    const Eigen::Index nvalid = rays.valid.count();
    const int nc = static_cast<int>(features.rows());
    const Eigen::VectorXd centers = bins.centers();

    LiftedPoints out;
    const Eigen::Index cap = nvalid * nd;
    out.positions.resize(3, cap);
    out.features.resize(nc, cap);
    out.camera_id.resize(cap);
    out.pixel_id.resize(cap);
    out.bin_id.resize(cap);

    Eigen::Index n = 0;
    for (int i = 0; i < rays.hf; ++i) {
        for (int j = 0; j < rays.wf; ++j) {
            if (!rays.valid(i, j)) continue;
            const Eigen::Index p = static_cast<Eigen::Index>(i) * rays.wf + j;
            const Eigen::Vector3d dir = rays.dirs.col(p);
            for (int k = 0; k < nd; ++k) {
                const double w = depth_dist(k, p);
                if (!keep_zero_weight && w == 0.0) continue;
                out.positions.col(n) = extr.rotation * (dir * centers[k]) + extr.translation;
                out.features.col(n) = features.col(p) * w;
                out.camera_id[n] = camera_id;
                out.pixel_id[n] = static_cast<int>(p);
                out.bin_id[n] = k;
                ++n;
            }
        }
    }
    out.positions.conservativeResize(3, n);
    out.features.conservativeResize(nc, n);
    out.camera_id.conservativeResize(n);
    out.pixel_id.conservativeResize(n);
    out.bin_id.conservativeResize(n);
    return out;
}

LiftedPoints concat(const std::vector<LiftedPoints>& parts) {
    Eigen::Index total = 0;
    int nc = 0;
    for (const auto& p : parts) {
        total += p.size();
        if (p.features.rows() > 0) nc = static_cast<int>(p.features.rows());
    }
    LiftedPoints out;
    out.positions.resize(3, total);
    out.features.resize(nc, total);
    out.camera_id.resize(total);
    out.pixel_id.resize(total);
    out.bin_id.resize(total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        const Eigen::Index n = p.size();
        if (n == 0) continue;
        out.positions.middleCols(at, n) = p.positions;
        out.features.middleCols(at, n) = p.features;
        out.camera_id.segment(at, n) = p.camera_id;
        out.pixel_id.segment(at, n) = p.pixel_id;
        out.bin_id.segment(at, n) = p.bin_id;
        at += n;
    }
    return out;
}

}  // namespace fbev
