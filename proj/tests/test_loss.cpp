#include "fbev/loss.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fbev;

namespace {

ChannelGrid random_probs(int nc, int nx, int ny, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.1, 1.0);
    ChannelGrid probs = zero_channels(nc, nx, ny);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            double z = 0.0;
            for (int c = 0; c < nc; ++c) {
                probs[static_cast<size_t>(c)](i, j) = unit(rng);
                z += probs[static_cast<size_t>(c)](i, j);
            }
            for (int c = 0; c < nc; ++c) probs[static_cast<size_t>(c)](i, j) /= z;
        }
    return probs;
}

}  // namespace

TEST_CASE("semantic loss matches the hand-computed example") {
    // Two cells, three classes. Cell 0: p = (0.7, 0.2, 0.1), gt 0, vis 1.
    // Cell 1: p = (0.2, 0.5, 0.3), gt 1, vis 0.5. Weights (1, 2, 3).
    ChannelGrid probs = zero_channels(3, 1, 2);
    probs[0](0, 0) = 0.7; probs[1](0, 0) = 0.2; probs[2](0, 0) = 0.1;
    probs[0](0, 1) = 0.2; probs[1](0, 1) = 0.5; probs[2](0, 1) = 0.3;
    GridI gt(1, 2);
    gt << 0, 1;
    Grid vis(1, 2);
    vis << 1.0, 0.5;
    LossConfig cfg;
    cfg.class_weights.resize(3);
    cfg.class_weights << 1.0, 2.0, 3.0;

    const auto res = semantic_loss(probs, gt, vis, cfg);
    CHECK(res.loss == doctest::Approx(0.6998814163324519).epsilon(1e-12));
    // Gradient of cell 0, gt channel: vis * alpha / mass * (p - 1).
    CHECK(res.grad_logits[0](0, 0) == doctest::Approx(1.0 / 1.5 * (0.7 - 1.0)).epsilon(1e-12));
    CHECK(res.grad_logits[1](0, 1) == doctest::Approx(0.5 * 2.0 / 1.5 * (0.5 - 1.0)).epsilon(1e-12));
}

TEST_CASE("zero-visibility cells contribute exactly zero") {
    const int nc = 4, nx = 3, ny = 3;
    ChannelGrid probs = random_probs(nc, nx, ny, 5);
    GridI gt = GridI::Zero(nx, ny);
    gt(1, 1) = 2;
    Grid vis = Grid::Ones(nx, ny);
    vis(1, 1) = 0.0;
    vis(0, 2) = 0.0;

    const auto cfg = uniform_weights(nc);
    const auto masked = semantic_loss(probs, gt, vis, cfg);
    for (int c = 0; c < nc; ++c) {
        CHECK(masked.grad_logits[static_cast<size_t>(c)](1, 1) == 0.0);
        CHECK(masked.grad_logits[static_cast<size_t>(c)](0, 2) == 0.0);
    }
    // Changing the prediction at a masked cell must not change the loss.
    ChannelGrid other = probs;
    other[0](1, 1) = 0.97;
    for (int c = 1; c < nc; ++c) other[static_cast<size_t>(c)](1, 1) = 0.01;
    CHECK(semantic_loss(other, gt, vis, cfg).loss == masked.loss);

    // Fully occluded: zero loss and zero gradient.
    const auto none = semantic_loss(probs, gt, Grid::Zero(nx, ny), cfg);
    CHECK(none.loss == 0.0);
    for (const auto& g : none.grad_logits) CHECK(g.isZero());
}

TEST_CASE("per-class weight scales that class's contribution exactly") {
    const int nc = 3;
    ChannelGrid probs = random_probs(nc, 2, 2, 9);
    GridI gt(2, 2);
    gt << 0, 1, 1, 2;
    const Grid vis = Grid::Ones(2, 2);

    LossConfig cfg = uniform_weights(nc);
    const double base = semantic_loss(probs, gt, vis, cfg).loss;
    double class1 = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (gt(i, j) == 1) class1 -= std::log(probs[1](i, j)) / 4.0;

    cfg.class_weights[1] = 2.0;
    CHECK(semantic_loss(probs, gt, vis, cfg).loss ==
          doctest::Approx(base + class1).epsilon(1e-12));
}

TEST_CASE("semantic loss gradient matches finite differences through softmax") {
    const int nc = 4, nx = 2, ny = 3;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uf(-1.0, 1.0);
    ChannelGrid logits = zero_channels(nc, nx, ny);
    for (auto& g : logits) g = Grid::NullaryExpr(nx, ny, [&]() { return uf(rng); });
    GridI gt = GridI::NullaryExpr(nx, ny, [&]() { return static_cast<int>(rng() % nc); });
    Grid vis = Grid::NullaryExpr(nx, ny, [&]() { return 0.25 + 0.75 * std::abs(uf(rng)); });
    LossConfig cfg;
    cfg.class_weights.resize(nc);
    cfg.class_weights << 1.0, 2.5, 0.5, 1.5;

    const auto res = semantic_loss(softmax_channels(logits), gt, vis, cfg);
    const double h = 1e-5;
    for (int c = 0; c < nc; ++c)
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) {
                ChannelGrid pert = logits;
                pert[static_cast<size_t>(c)](i, j) += h;
                const double up = semantic_loss(softmax_channels(pert), gt, vis, cfg).loss;
                pert[static_cast<size_t>(c)](i, j) -= 2.0 * h;
                const double dn = semantic_loss(softmax_channels(pert), gt, vis, cfg).loss;
                const double numeric = (up - dn) / (2.0 * h);
                const double analytic = res.grad_logits[static_cast<size_t>(c)](i, j);
                CHECK(std::abs(analytic - numeric) /
                          std::max({1e-4, std::abs(analytic), std::abs(numeric)}) <
                      1e-6);
            }
}

TEST_CASE("semantic loss input validation") {
    ChannelGrid probs = random_probs(3, 2, 2, 1);
    GridI gt = GridI::Zero(2, 2);
    const Grid vis = Grid::Ones(2, 2);
    const auto cfg = uniform_weights(3);

    ChannelGrid broken = probs;
    broken[0](0, 0) += 0.1;  // off the simplex
    CHECK_THROWS_AS(semantic_loss(broken, gt, vis, cfg), DomainError);

    GridI bad_gt = gt;
    bad_gt(1, 1) = 7;
    CHECK_THROWS_AS(semantic_loss(probs, bad_gt, vis, cfg), DataError);
    CHECK_THROWS_AS(semantic_loss(probs, gt, Grid::Ones(3, 3), cfg), ShapeError);
    CHECK_THROWS_AS(semantic_loss(probs, gt, vis, uniform_weights(2)), ShapeError);

    LossConfig bad_cfg = cfg;
    bad_cfg.class_weights[0] = 0.0;
    CHECK_THROWS_AS(semantic_loss(probs, gt, vis, bad_cfg), ConfigError);
}

TEST_CASE("occlusion loss matches the hand-computed example") {
    Grid pred(1, 2);
    pred << 0.8, 0.3;
    Grid gt(1, 2);
    gt << 1.0, 0.0;
    const auto res = occlusion_loss(pred, gt);
    CHECK(res.loss == doctest::Approx(0.2899092476264711).epsilon(1e-12));
    CHECK(res.grad(0, 0) == doctest::Approx((0.8 - 1.0) / (0.8 * 0.2) / 2.0).epsilon(1e-12));

    const auto logi = occlusion_loss(pred, gt, 1e-7, true);
    CHECK(logi.loss == res.loss);
    CHECK(logi.grad(0, 1) == doctest::Approx(0.3 / 2.0).epsilon(1e-12));
}

TEST_CASE("occlusion loss gradient matches finite differences") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> up(0.05, 0.95);
    Grid pred = Grid::NullaryExpr(3, 3, [&]() { return up(rng); });
    Grid gt = Grid::NullaryExpr(3, 3, [&]() { return static_cast<double>(rng() % 2); });

    SUBCASE("generic gradient wrt probability") {
        const auto res = occlusion_loss(pred, gt);
        const double h = 1e-6;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                Grid pert = pred;
                pert(i, j) += h;
                const double u = occlusion_loss(pert, gt).loss;
                pert(i, j) -= 2.0 * h;
                const double d = occlusion_loss(pert, gt).loss;
                const double numeric = (u - d) / (2.0 * h);
                CHECK(std::abs(res.grad(i, j) - numeric) /
                          std::max({1e-4, std::abs(res.grad(i, j)), std::abs(numeric)}) <
                      1e-6);
            }
    }
    SUBCASE("logistic gradient wrt the pre-activation") {
        Grid logit = Grid::NullaryExpr(3, 3, [&](Eigen::Index i, Eigen::Index j) {
            return std::log(pred(i, j) / (1.0 - pred(i, j)));
        });
        auto through = [&](const Grid& z) {
            const Grid p = (1.0 / (1.0 + (-z.array()).exp())).matrix();
            return occlusion_loss(p, gt, 1e-7, true);
        };
        const auto res = through(logit);
        const double h = 1e-6;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                Grid pert = logit;
                pert(i, j) += h;
                const double u = through(pert).loss;
                pert(i, j) -= 2.0 * h;
                const double d = through(pert).loss;
                const double numeric = (u - d) / (2.0 * h);
                CHECK(std::abs(res.grad(i, j) - numeric) /
                          std::max({1e-4, std::abs(res.grad(i, j)), std::abs(numeric)}) <
                      1e-6);
            }
    }
}

TEST_CASE("occlusion loss validation") {
    Grid pred = Grid::Constant(2, 2, 0.5);
    Grid gt = Grid::Zero(2, 2);
    gt(0, 0) = 0.4;  // not binary
    CHECK_THROWS_AS(occlusion_loss(pred, gt), DomainError);
    CHECK_THROWS_AS(occlusion_loss(pred, Grid::Zero(3, 3)), ShapeError);
}

TEST_CASE("total loss combines linearly in lambda") {
    CHECK(total_loss(0.7, 0.3, 1.0) == doctest::Approx(1.0));
    CHECK(total_loss(0.7, 0.3, 0.0) == doctest::Approx(0.7));
    CHECK(total_loss(0.7, 0.3, 2.5) == doctest::Approx(0.7 + 0.75));
}

TEST_CASE("softmax channels yields a simplex and preserves argmax") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uf(-3.0, 3.0);
    ChannelGrid logits = zero_channels(4, 3, 3);
    for (auto& g : logits) g = Grid::NullaryExpr(3, 3, [&]() { return uf(rng); });
    const ChannelGrid p = softmax_channels(logits);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double z = 0.0;
            int arg_l = 0, arg_p = 0;
            for (int c = 0; c < 4; ++c) {
                z += p[static_cast<size_t>(c)](i, j);
                if (logits[static_cast<size_t>(c)](i, j) > logits[static_cast<size_t>(arg_l)](i, j)) arg_l = c;
                if (p[static_cast<size_t>(c)](i, j) > p[static_cast<size_t>(arg_p)](i, j)) arg_p = c;
            }
            CHECK(z == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(arg_l == arg_p);
        }
}

TEST_CASE("preset weight vectors") {
    const auto uni = uniform_weights();
    CHECK(uni.class_weights.size() == kNumClasses);
    CHECK(uni.class_weights.isOnes());
    const auto ref = reference_weights();
    CHECK(ref.class_weights[static_cast<int>(SemClass::Vehicles)] == 13.0);
    CHECK(ref.class_weights[static_cast<int>(SemClass::Markings)] == 3.0);
    CHECK(ref.class_weights[static_cast<int>(SemClass::Street)] == 1.0);
    CHECK(ref.class_weights[static_cast<int>(SemClass::Background)] == 1.0);
    CHECK(ref.class_weights[static_cast<int>(SemClass::Invalid)] < 0.01);
    ref.validate();
}
