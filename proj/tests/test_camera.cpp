#include "fbev/camera.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace fbev;

namespace {

std::vector<DistortionModel> all_models() {
    return {
        make_polynomial(Eigen::Vector4d(280.0, 1.5, -12.0, 0.8), 1.9),
        make_ucm(100.0, 0.6, 1.9),
        make_eucm(100.0, 0.6, 1.2, 1.9),
        make_rectilinear(100.0, 1.4),
        make_stereographic(100.0, 1.9),
        make_double_sphere(100.0, 0.3, 0.4, 1.9),
    };
}

}  // namespace

TEST_CASE("forward distortion closed forms at theta = 0.5, f = 100") {
    const double t = 0.5;
    CHECK(forward_distort(make_rectilinear(100.0, 1.4), t) == doctest::Approx(54.63024898437905).epsilon(1e-12));
    CHECK(forward_distort(make_stereographic(100.0), t) == doctest::Approx(51.06838424420725).epsilon(1e-12));
    CHECK(forward_distort(make_ucm(100.0, 0.6), t) == doctest::Approx(32.44661590962748).epsilon(1e-12));
    CHECK(forward_distort(make_eucm(100.0, 0.6, 1.2), t) == doctest::Approx(49.6984495013374).epsilon(1e-12));
    CHECK(forward_distort(make_double_sphere(100.0, 0.3, 0.4), t) ==
          doctest::Approx(39.454867259079556).epsilon(1e-12));
    CHECK(forward_distort(make_polynomial(Eigen::Vector4d(280.0, 1.5, -12.0, 0.8)), t) ==
          doctest::Approx(138.925).epsilon(1e-12));
}

TEST_CASE("r(0) = 0 for every model") {
    for (const auto& m : all_models()) CHECK(forward_distort(m, 0.0) == 0.0);
}

TEST_CASE("derivative matches central differences") {
    const double h = 1e-6;
    for (const auto& m : all_models()) {
        for (double t : {0.1, 0.4, 0.8, 1.2}) {
            if (t + h >= m.theta_max) continue;
            const double num = (forward_distort(m, t + h) - forward_distort(m, t - h)) / (2.0 * h);
            const double ana = forward_distort_derivative(m, t);
            CHECK(std::abs(num - ana) / std::max(1.0, std::abs(ana)) < 1e-7);
        }
    }
}

TEST_CASE("forward/inverse round trip within 1e-9 rad over 1000 samples") {
    for (const auto& m : all_models()) {
        const double hi = m.theta_max * (1.0 - 1e-5);
        for (int i = 1; i <= 1000; ++i) {
            const double theta = hi * i / 1000.0;
            const double r = forward_distort(m, theta);
            CHECK(std::abs(inverse_distort(m, r) - theta) < 1e-9);
        }
    }
}

TEST_CASE("model reductions agree to 1e-12") {
    const double f = 150.0;
    const auto rect = make_rectilinear(f, 1.2);
    const auto ucm0 = make_ucm(f, 0.0, 1.2);
    // beta = 1 collapses eUCM onto UCM with xi = alpha / (1 - alpha) and a
    // rescaled focal length.
    const double alpha = 0.37;
    const auto eucm1 = make_eucm(f, alpha, 1.0, 1.2);
    const auto ucm_eq = make_ucm(f / (1.0 - alpha), alpha / (1.0 - alpha), 1.2);
    const auto stereo = make_stereographic(f, 1.9);
    const auto ds = make_double_sphere(f, 0.0, 0.5, 1.9);
    for (int i = 1; i < 200; ++i) {
        const double t = 1.2 * (1.0 - 1e-9) * i / 200.0;
        const double r = forward_distort(rect, t);
        CHECK(std::abs(forward_distort(ucm0, t) - r) <= 1e-12 * std::max(1.0, r));
        CHECK(std::abs(forward_distort(eucm1, t) - forward_distort(ucm_eq, t)) <=
              1e-12 * std::max(1.0, r));
    }
    for (int i = 1; i < 200; ++i) {
        const double t = 1.9 * (1.0 - 1e-9) * i / 200.0;
        const double r = forward_distort(stereo, t);
        CHECK(std::abs(forward_distort(ds, t) - r) <= 1e-12 * std::max(1.0, r));
    }
}

TEST_CASE("theta outside [0, theta_max) is rejected") {
    const auto m = make_ucm(100.0, 0.6, 1.5);
    CHECK_THROWS_AS(forward_distort(m, -0.01), DomainError);
    CHECK_THROWS_AS(forward_distort(m, 1.5), DomainError);
    CHECK_THROWS_AS(inverse_distort(m, -1.0), DomainError);
    CHECK_THROWS_AS(inverse_distort(m, max_radius(m) * 1.01), DomainError);
}

TEST_CASE("non-monotone models are rejected at construction") {
    // r decreases once 3 a3 theta^2 dominates a1.
    CHECK_THROWS_AS(make_polynomial(Eigen::Vector4d(10.0, 0.0, -40.0, 0.0), 1.9), ConfigError);
    CHECK_THROWS_AS(make_polynomial(Eigen::Vector4d(-5.0, 0.0, 0.0, 0.0), 1.0), ConfigError);
    CHECK_THROWS_AS(make_rectilinear(-1.0), ConfigError);
    CHECK_THROWS_AS(make_rectilinear(100.0, 2.0), ConfigError);  // tan blows up past pi/2
}

TEST_CASE("exact inverse polynomial is used and validated") {
    DistortionModel m;
    m.kind = ModelKind::Polynomial;
    m.f = 120.0;
    m.poly << 120.0, 0.0, 0.0, 0.0;  // r = 120 theta, theta = r / 120
    m.theta_max = 1.9;
    m.inverse_poly = {1.0 / 120.0, 0, 0, 0, 0, 0, 0, 0, 0};
    validate(m);
    CHECK(inverse_distort(m, 60.0) == doctest::Approx(0.5).epsilon(1e-15));

    m.inverse_poly = {1.0 / 100.0, 0, 0, 0, 0, 0, 0, 0, 0};  // inconsistent
    CHECK_THROWS_AS(validate(m), ConfigError);
}

TEST_CASE("inverse polynomial uses all nine powers") {
    // theta(r) for the stereographic model: 2 atan(r / 2f); fit degree 9.
    // A nine-term fit holds the load-time consistency tolerance up to roughly
    // a 1.2 rad half-FOV; wider cones would need more terms.
    const double f = 100.0;
    const auto stereo = make_stereographic(f, 1.2);
    // Least-squares fit on a dense sample, computed here so the coefficients
    // match the frozen model exactly.
    const int n = 400;
    Eigen::MatrixXd A(n, 9);
    Eigen::VectorXd b(n);
    const double r_max = max_radius(stereo, 1e-3);
    // Fit in the normalized radius t = r / r_max; a raw monomial basis in r
    // would be hopelessly ill-conditioned at r ~ 280.
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1) / n;
        double pw = t;
        for (int k = 0; k < 9; ++k) {
            A(i, k) = pw;
            pw *= t;
        }
        b[i] = 2.0 * std::atan(t * r_max / (2.0 * f));
    }
    const Eigen::VectorXd q = A.colPivHouseholderQr().solve(b);
    DistortionModel m = stereo;
    std::array<double, 9> arr;
    double scale = r_max;
    for (int k = 0; k < 9; ++k) {
        arr[static_cast<size_t>(k)] = q[k] / scale;
        scale *= r_max;
    }
    m.inverse_poly = arr;
    validate(m);  // round-trip consistency within the default tolerance
    for (double r : {10.0, 50.0, 120.0}) {
        CHECK(std::abs(forward_distort(m, inverse_distort(m, r)) - r) < 1e-5 * std::max(1.0, r));
    }
}

TEST_CASE("pixel round trip over 10^4 random pixels within 1e-6 px") {
    CameraIntrinsics intr;
    intr.model = make_polynomial(Eigen::Vector4d(280.0, 1.5, -12.0, 0.8), 1.9);
    intr.width = 1280;
    intr.height = 960;
    intr.cx = 639.5;
    intr.cy = 479.5;
    intr.validate();

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> du(0.0, intr.width - 1.0);
    std::uniform_real_distribution<double> dv(0.0, intr.height - 1.0);
    int tested = 0;
    while (tested < 10000) {
        const double u = du(rng);
        const double v = dv(rng);
        const auto ray = try_pixel_to_ray(intr, u, v);
        if (!ray) continue;
        ++tested;
        CHECK(std::abs(ray->norm() - 1.0) < 1e-12);
        const auto px = ray_to_pixel(intr, *ray);
        REQUIRE(px.has_value());
        CHECK(std::abs(px->x() - u) < 1e-6);
        CHECK(std::abs(px->y() - v) < 1e-6);
    }
}

TEST_CASE("out-of-FOV pixels yield no ray") {
    CameraIntrinsics intr;
    intr.model = make_rectilinear(50.0, 0.8);
    intr.width = 400;
    intr.height = 400;
    intr.cx = 199.5;
    intr.cy = 199.5;
    intr.validate();
    CHECK_FALSE(try_pixel_to_ray(intr, 0.0, 0.0).has_value());  // corner beyond the cone
    CHECK(try_pixel_to_ray(intr, 199.5, 199.5).has_value());
    CHECK_THROWS_AS(pixel_to_ray(intr, 0.0, 0.0), DomainError);
    CHECK_FALSE(ray_to_pixel(intr, Eigen::Vector3d(0, 0, -1)).has_value());
    CHECK_THROWS_AS(ray_to_pixel(intr, Eigen::Vector3d::Zero()), DomainError);
}

TEST_CASE("principal point maps to the optical axis") {
    CameraIntrinsics intr;
    intr.model = make_ucm(90.0, 0.8, 1.9);
    intr.width = 640;
    intr.height = 480;
    intr.cx = 319.5;
    intr.cy = 239.5;
    const Eigen::Vector3d ray = pixel_to_ray(intr, intr.cx, intr.cy);
    CHECK((ray - Eigen::Vector3d(0, 0, 1)).norm() == 0.0);
}

TEST_CASE("extrinsics validation rejects non-rotations") {
    CameraExtrinsics e;
    e.validate();
    e.rotation(0, 0) = 2.0;
    CHECK_THROWS_AS(e.validate(), ConfigError);
    e.rotation = Eigen::Matrix3d::Identity();
    e.rotation.col(0) *= -1.0;  // determinant -1
    CHECK_THROWS_AS(e.validate(), ConfigError);
}

TEST_CASE("intrinsics validation") {
    CameraIntrinsics intr;
    intr.model = make_rectilinear(50.0, 1.0);
    intr.width = 0;
    CHECK_THROWS_AS(intr.validate(), ConfigError);
    intr.width = 100;
    intr.height = 100;
    intr.cx = 150.0;
    CHECK_THROWS_AS(intr.validate(), ConfigError);
}

TEST_CASE("cylindrical ray formula") {
    CylindricalIntrinsics cyl;
    cyl.f_az = 100.0;
    cyl.f_el = 80.0;
    cyl.cx = 50.0;
    cyl.cy = 40.0;
    cyl.width = 101;
    cyl.height = 81;
    const double u = 75.0, v = 20.0;
    const double az = (u - cyl.cx) / cyl.f_az;
    const double te = (v - cyl.cy) / cyl.f_el;
    const Eigen::Vector3d expect =
        Eigen::Vector3d(std::sin(az), te, std::cos(az)).normalized();
    CHECK((cylindrical_ray(cyl, u, v) - expect).norm() < 1e-15);
    CHECK((cylindrical_ray(cyl, cyl.cx, cyl.cy) - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("cylindrical rectification resamples consistently") {
    CameraIntrinsics intr;
    intr.model = make_stereographic(120.0, 1.9);
    intr.width = 320;
    intr.height = 240;
    intr.cx = 159.5;
    intr.cy = 119.5;
    intr.validate();

    // Smooth source: channel value = source column index.
    Image src;
    Eigen::MatrixXd ramp(intr.height, intr.width);
    for (int i = 0; i < intr.height; ++i)
        for (int j = 0; j < intr.width; ++j) ramp(i, j) = j;
    src.channels = {ramp};

    CylindricalConfig cfg;
    cfg.width = 320;
    cfg.height = 240;
    cfg.fill = -1.0;
    const RectifyResult bil = cylindrical_rectify(intr, src, cfg);
    cfg.resample = Resample::Nearest;
    const RectifyResult nea = cylindrical_rectify(intr, src, cfg);

    REQUIRE(bil.valid.count() > 0);
    int checked = 0;
    for (int i = 0; i < cfg.height; ++i)
        for (int j = 0; j < cfg.width; ++j) {
            if (!bil.valid(i, j)) {
                CHECK(bil.image.channels[0](i, j) == -1.0);
                continue;
            }
            // Both resamplers must agree with the analytic source column of
            // the rectified ray to within a pixel.
            const Eigen::Vector3d d = cylindrical_ray(bil.intrinsics, j, i);
            const auto px = ray_to_pixel(intr, d);
            REQUIRE(px.has_value());
            CHECK(std::abs(bil.image.channels[0](i, j) - px->x()) < 1e-9);
            CHECK(std::abs(nea.image.channels[0](i, j) - px->x()) <= 0.5 + 1e-12);
            ++checked;
        }
    CHECK(checked > 1000);
}

TEST_CASE("max_radius is the image of the clipped angle range") {
    for (const auto& m : all_models())
        CHECK(max_radius(m) == forward_distort(m, m.theta_max * (1.0 - 1e-6)));
}
