#include "fbev/camera.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fbev {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Polynomial: return "polynomial";
        case ModelKind::UCM: return "ucm";
        case ModelKind::EUCM: return "eucm";
        case ModelKind::Rectilinear: return "rectilinear";
        case ModelKind::Stereographic: return "stereographic";
        case ModelKind::DoubleSphere: return "double_sphere";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "polynomial") return ModelKind::Polynomial;
    if (name == "ucm") return ModelKind::UCM;
    if (name == "eucm") return ModelKind::EUCM;
    if (name == "rectilinear") return ModelKind::Rectilinear;
    if (name == "stereographic") return ModelKind::Stereographic;
    if (name == "double_sphere") return ModelKind::DoubleSphere;
    throw ConfigError("unknown distortion model kind: " + name);
}

double forward_distort(const DistortionModel& m, double theta) {
    if (theta < 0.0 || theta >= m.theta_max) {
        std::ostringstream os;
        os << "forward_distort: theta " << theta << " outside [0, " << m.theta_max << ")";
        throw DomainError(os.str());
    }
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    switch (m.kind) {
        case ModelKind::Polynomial:
            return ((m.poly[3] * theta + m.poly[2]) * theta + m.poly[1]) * theta * theta +
                   m.poly[0] * theta;
        case ModelKind::UCM:
            return m.f * s / (c + m.xi);
        case ModelKind::EUCM:
            return m.f * s / (c + m.alpha * (std::sqrt(m.beta * s * s + c * c) - c));
        case ModelKind::Rectilinear:
            return m.f * std::tan(theta);
        case ModelKind::Stereographic:
            return 2.0 * m.f * std::tan(theta / 2.0);
        case ModelKind::DoubleSphere: {
            const double xc = m.xi + c;
            return m.f * s / (m.alpha * std::sqrt(s * s + xc * xc) + (1.0 - m.alpha) * xc);
        }
    }
    throw DomainError("forward_distort: bad kind");
}

double forward_distort_derivative(const DistortionModel& m, double theta) {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    switch (m.kind) {
        case ModelKind::Polynomial:
            return m.poly[0] + 2.0 * m.poly[1] * theta + 3.0 * m.poly[2] * theta * theta +
                   4.0 * m.poly[3] * theta * theta * theta;
        case ModelKind::UCM: {
            const double d = c + m.xi;
            return m.f * (1.0 + m.xi * c) / (d * d);
        }
        case ModelKind::EUCM: {
            const double q = std::sqrt(m.beta * s * s + c * c);
            const double d = c + m.alpha * (q - c);
            const double dq = s * c * (m.beta - 1.0) / q;
            const double dd = -s + m.alpha * (dq + s);
            return m.f * (c * d - s * dd) / (d * d);
        }
        case ModelKind::Rectilinear: {
            const double sec = 1.0 / c;
            return m.f * sec * sec;
        }
        case ModelKind::Stereographic: {
            const double sec = 1.0 / std::cos(theta / 2.0);
            return m.f * sec * sec;
        }
        case ModelKind::DoubleSphere: {
            const double xc = m.xi + c;
            const double big = std::sqrt(s * s + xc * xc);
            const double d = m.alpha * big + (1.0 - m.alpha) * xc;
            const double dd = -s * (m.alpha * m.xi / big + 1.0 - m.alpha);
            return m.f * (c * d - s * dd) / (d * d);
        }
    }
    throw DomainError("forward_distort_derivative: bad kind");
}

double max_radius(const DistortionModel& m, double margin) {
    return forward_distort(m, m.theta_max * (1.0 - margin));
}

static double eval_inverse_poly(const std::array<double, 9>& p, double r) {
    double acc = 0.0;
    for (int i = 8; i >= 0; --i) acc = acc * r + p[static_cast<size_t>(i)];
    return acc * r;
}

double inverse_distort(const DistortionModel& m, double r) {
    if (r < 0.0) throw DomainError("inverse_distort: negative radius");
    if (r == 0.0) return 0.0;
    const double r_max = max_radius(m);
    if (r > r_max) {
        std::ostringstream os;
        os << "inverse_distort: radius " << r << " beyond image of valid range (" << r_max << ")";
        throw DomainError(os.str());
    }
    if (m.inverse_poly) {
        double theta = eval_inverse_poly(*m.inverse_poly, r);
        if (theta < 0.0 || theta >= m.theta_max)
            throw DomainError("inverse_distort: inverse polynomial left the valid angle range");
        return theta;
    }
    // Safeguarded Newton on a monotone bracket.
    const double tol = 1e-10 * std::max(1.0, r);
    double lo = 0.0;
    double hi = m.theta_max * (1.0 - 1e-6);
    double theta = hi * r / r_max;
    double resid = 0.0;
    for (int it = 0; it < 50; ++it) {
        resid = forward_distort(m, theta) - r;
        if (std::abs(resid) <= tol) return theta;
        if (resid > 0.0) hi = theta; else lo = theta;
        const double deriv = forward_distort_derivative(m, theta);
        double next = theta - resid / deriv;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        theta = next;
    }
    std::ostringstream os;
    os << "inverse_distort: no convergence after 50 iterations, residual " << resid;
    throw NumericError(os.str());
}

void validate(const DistortionModel& m, double inverse_poly_tol) {
    if (m.f <= 0.0) throw ConfigError("DistortionModel: focal length must be positive");
    if (!(m.theta_max > 0.0 && m.theta_max <= M_PI))
        throw ConfigError("DistortionModel: theta_max must lie in (0, pi]");
    // Monotonicity of r(theta), checked on a dense sample.
    const int n = 2048;
    double prev = 0.0;
    for (int i = 1; i < n; ++i) {
        const double theta = m.theta_max * (1.0 - 1e-9) * i / n;
        const double r = forward_distort(m, theta);
        if (!(r > prev) || !std::isfinite(r))
            throw ConfigError("DistortionModel: r(theta) is not strictly increasing for kind " +
                              to_string(m.kind));
        prev = r;
    }
    if (m.inverse_poly) {
        const double r_max = max_radius(m, 1e-3);
        for (int i = 1; i <= 64; ++i) {
            const double r = r_max * i / 64.0;
            const double theta = eval_inverse_poly(*m.inverse_poly, r);
            if (theta < 0.0 || theta >= m.theta_max)
                throw ConfigError("DistortionModel: inverse polynomial out of angle range");
            const double back = forward_distort(m, theta);
            if (std::abs(back - r) > inverse_poly_tol * std::max(1.0, r))
                throw ConfigError(
                    "DistortionModel: inverse polynomial inconsistent with forward model");
        }
    }
}

DistortionModel make_polynomial(const Eigen::Vector4d& a, double theta_max) {
    DistortionModel m;
    m.kind = ModelKind::Polynomial;
    m.f = a[0];
    m.poly = a;
    m.theta_max = theta_max;
    validate(m);
    return m;
}

DistortionModel make_ucm(double f, double xi, double theta_max) {
    DistortionModel m;
    m.kind = ModelKind::UCM;
    m.f = f;
    m.xi = xi;
    m.theta_max = theta_max;
    validate(m);
    return m;
}

DistortionModel make_eucm(double f, double alpha, double beta, double theta_max) {
    DistortionModel m;
    m.kind = ModelKind::EUCM;
    m.f = f;
    m.alpha = alpha;
    m.beta = beta;
    m.theta_max = theta_max;
    validate(m);
    return m;
}

DistortionModel make_rectilinear(double f, double theta_max) {
    DistortionModel m;
    m.kind = ModelKind::Rectilinear;
    m.f = f;
    m.theta_max = theta_max;
    validate(m);
    return m;
}

DistortionModel make_stereographic(double f, double theta_max) {
    DistortionModel m;
    m.kind = ModelKind::Stereographic;
    m.f = f;
    m.theta_max = theta_max;
    validate(m);
    return m;
}

DistortionModel make_double_sphere(double f, double xi, double alpha, double theta_max) {
    DistortionModel m;
    m.kind = ModelKind::DoubleSphere;
    m.f = f;
    m.xi = xi;
    m.alpha = alpha;
    m.theta_max = theta_max;
    validate(m);
    return m;
}

void CameraIntrinsics::validate() const {
    fbev::validate(model);
    if (width < 1 || height < 1) throw ConfigError("CameraIntrinsics: empty image");
    if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
        throw ConfigError("CameraIntrinsics: principal point outside the image");
}

void CameraExtrinsics::validate() const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
        throw ConfigError("CameraExtrinsics: rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9)
        throw ConfigError("CameraExtrinsics: rotation determinant is not +1");
}

std::optional<Eigen::Vector3d> try_pixel_to_ray(const CameraIntrinsics& intr, double u, double v) {
    const double x = u - intr.cx;
    const double y = v - intr.cy;
    const double r = std::sqrt(x * x + y * y);
    if (r > max_radius(intr.model)) return std::nullopt;
    if (r == 0.0) return Eigen::Vector3d(0.0, 0.0, 1.0);
    const double theta = inverse_distort(intr.model, r);
    const double phi = std::atan2(y, x);
    const double st = std::sin(theta);
    return Eigen::Vector3d(std::cos(phi) * st, std::sin(phi) * st, std::cos(theta));
}

Eigen::Vector3d pixel_to_ray(const CameraIntrinsics& intr, double u, double v) {
    auto ray = try_pixel_to_ray(intr, u, v);
    if (!ray) {
        std::ostringstream os;
        os << "pixel_to_ray: pixel (" << u << ", " << v << ") outside the theta_max cone";
        throw DomainError(os.str());
    }
    return *ray;
}

std::optional<Eigen::Vector2d> ray_to_pixel(const CameraIntrinsics& intr, const Eigen::Vector3d& dir) {
    const double norm = dir.norm();
    if (norm == 0.0) throw DomainError("ray_to_pixel: zero direction");
    const double theta = std::acos(std::clamp(dir.z() / norm, -1.0, 1.0));
    if (theta >= intr.model.theta_max) return std::nullopt;
    if (theta == 0.0) return Eigen::Vector2d(intr.cx, intr.cy);
    const double phi = std::atan2(dir.y(), dir.x());
    const double r = forward_distort(intr.model, theta);
    return Eigen::Vector2d(intr.cx + r * std::cos(phi), intr.cy + r * std::sin(phi));
}

Eigen::Vector3d cylindrical_ray(const CylindricalIntrinsics& cyl, double u, double v) {
    const double az = (u - cyl.cx) / cyl.f_az;
    const double tan_el = (v - cyl.cy) / cyl.f_el;
    Eigen::Vector3d d(std::sin(az), tan_el, std::cos(az));
    return d.normalized();
}

static double sample_channel(const Eigen::MatrixXd& ch, double u, double v, Resample mode,
                             double fill) {
    const int rows = static_cast<int>(ch.rows());
    const int cols = static_cast<int>(ch.cols());
    if (mode == Resample::Nearest) {
        const int r = static_cast<int>(std::lround(v));
        const int c = static_cast<int>(std::lround(u));
        if (r < 0 || r >= rows || c < 0 || c >= cols) return fill;
        return ch(r, c);
    }
    const int c0 = static_cast<int>(std::floor(u));
    const int r0 = static_cast<int>(std::floor(v));
    const double fu = u - c0;
    const double fv = v - r0;
    auto at = [&](int r, int c) -> double {
        if (r < 0 || r >= rows || c < 0 || c >= cols) return fill;
        return ch(r, c);
    };
    return (1 - fv) * ((1 - fu) * at(r0, c0) + fu * at(r0, c0 + 1)) +
           fv * ((1 - fu) * at(r0 + 1, c0) + fu * at(r0 + 1, c0 + 1));
}

RectifyResult cylindrical_rectify(const CameraIntrinsics& intr, const Image& src,
                                  const CylindricalConfig& cfg) {
    if (cfg.width < 1 || cfg.height < 1)
        throw ConfigError("cylindrical_rectify: output size not configured");
    if (src.channels.empty()) throw ConfigError("cylindrical_rectify: empty source image");

    RectifyResult out;
    CylindricalIntrinsics& cyl = out.intrinsics;
    cyl.width = cfg.width;
    cyl.height = cfg.height;
    cyl.cx = (cfg.width - 1) / 2.0;
    cyl.cy = (cfg.height - 1) / 2.0;
    const double az_span = cfg.az_span > 0.0
                               ? cfg.az_span
                               : 2.0 * std::min(intr.model.theta_max * (1.0 - 1e-6), M_PI * 0.9);
    cyl.f_az = cfg.width / az_span;
    const double el_span =
        cfg.el_span > 0.0 ? cfg.el_span
                          : az_span * static_cast<double>(cfg.height) / cfg.width;
    cyl.f_el = cfg.height / el_span;

    out.image.channels.assign(src.channels.size(),
                              Eigen::MatrixXd::Constant(cfg.height, cfg.width, cfg.fill));
    out.valid = GridB::Constant(cfg.height, cfg.width, false);

    for (int i = 0; i < cfg.height; ++i) {
        for (int j = 0; j < cfg.width; ++j) {
            const Eigen::Vector3d d = cylindrical_ray(cyl, j, i);
            const auto px = ray_to_pixel(intr, d);
            if (!px) continue;
            const double u = px->x();
            const double v = px->y();
            if (u < 0.0 || u > intr.width - 1.0 || v < 0.0 || v > intr.height - 1.0) continue;
            out.valid(i, j) = true;
            for (size_t c = 0; c < src.channels.size(); ++c)
                out.image.channels[c](i, j) =
                    sample_channel(src.channels[c], u, v, cfg.resample, cfg.fill);
        }
    }
    return out;
}

}  // namespace fbev
