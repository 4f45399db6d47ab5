#pragma once

#include "fbev/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>

namespace fbev {

enum class ModelKind {
    Polynomial,
    UCM,
    EUCM,
    Rectilinear,
    Stereographic,
    DoubleSphere,
};

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Radial distortion model: incidence angle theta -> image radius r (pixels).
/// Validated at construction: r(theta) must be strictly increasing on
/// [0, theta_max), and an inverse polynomial, when present, must round-trip
/// against the forward map.
struct DistortionModel {
    ModelKind kind = ModelKind::Rectilinear;
    double f = 1.0;
    Eigen::Vector4d poly = Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);  // Polynomial a1..a4
    double xi = 0.0;                                             // UCM, DoubleSphere
    double alpha = 0.0;                                          // eUCM, DoubleSphere
    double beta = 1.0;                                           // eUCM
    std::optional<std::array<double, 9>> inverse_poly;           // p1..p9, theta(r)
    double theta_max = M_PI / 2.0;
};

// Factories run validate(); aggregate-constructed models should be validated
// explicitly before use.
DistortionModel make_polynomial(const Eigen::Vector4d& a, double theta_max = 1.9);
DistortionModel make_ucm(double f, double xi, double theta_max = 1.9);
DistortionModel make_eucm(double f, double alpha, double beta, double theta_max = 1.9);
DistortionModel make_rectilinear(double f, double theta_max = M_PI / 2.0);
DistortionModel make_stereographic(double f, double theta_max = 1.9);
DistortionModel make_double_sphere(double f, double xi, double alpha, double theta_max = 1.9);

/// Checks invariants; throws ConfigError on violation.
/// inverse_poly_tol bounds the relative r -> theta(r) -> r(theta) residual.
void validate(const DistortionModel& model, double inverse_poly_tol = 1e-6);

double forward_distort(const DistortionModel& model, double theta);
double forward_distort_derivative(const DistortionModel& model, double theta);

/// Analytic inverse polynomial when present, otherwise safeguarded Newton
/// (bisection fallback, 50 iterations) to |r(theta) - r| <= 1e-10 max(1, r).
double inverse_distort(const DistortionModel& model, double r);

/// Largest representable radius, r(theta_max * (1 - margin)).
double max_radius(const DistortionModel& model, double margin = 1e-6);

struct CameraIntrinsics {
    DistortionModel model;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    void validate() const;
};

/// Camera-to-vehicle pose. Camera frame: z along the optical axis, x right,
/// y down. Vehicle frame: x forward, y left, z up.
struct CameraExtrinsics {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    void validate() const;
};

/// Unit ray through pixel (u, v), camera frame. Empty when the pixel maps
/// outside the theta_max cone.
std::optional<Eigen::Vector3d> try_pixel_to_ray(const CameraIntrinsics& intr, double u, double v);

/// Throwing variant of try_pixel_to_ray; DomainError on out-of-FOV.
Eigen::Vector3d pixel_to_ray(const CameraIntrinsics& intr, double u, double v);

/// Forward projection; empty when theta >= theta_max.
std::optional<Eigen::Vector2d> ray_to_pixel(const CameraIntrinsics& intr, const Eigen::Vector3d& dir);

/// H x W multi-channel raster. channels[c](row, col), row 0 = top.
struct Image {
    std::vector<Eigen::MatrixXd> channels;

    int rows() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
    int cols() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
};

/// Virtual camera of a rectified image: azimuth linear in column,
/// tan(elevation) linear in row.
struct CylindricalIntrinsics {
    double f_az = 1.0;  // pixels per radian of azimuth
    double f_el = 1.0;  // pixels per unit tan(elevation)
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;
};

enum class Resample { Bilinear, Nearest };

struct CylindricalConfig {
    int width = 0;
    int height = 0;
    double az_span = 0.0;   // total azimuth coverage, radians; 0 = derive from theta_max
    double el_span = 0.0;   // total tan(elevation) coverage; 0 = derive from aspect
    double fill = 0.0;
    Resample resample = Resample::Bilinear;
};

Eigen::Vector3d cylindrical_ray(const CylindricalIntrinsics& cyl, double u, double v);

struct RectifyResult {
    Image image;
    GridB valid;  // H x W, false where the target ray fell outside the source FOV
    CylindricalIntrinsics intrinsics;
};

RectifyResult cylindrical_rectify(const CameraIntrinsics& intr, const Image& src,
                                  const CylindricalConfig& cfg);

}  // namespace fbev
