#include "fbev/metrics.hpp"

#include <doctest.h>

#include <random>

using namespace fbev;

namespace {

GridB mask_from(std::initializer_list<int> bits, int nx, int ny) {
    GridB m(nx, ny);
    auto it = bits.begin();
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) m(i, j) = (*it++ != 0);
    return m;
}

}  // namespace

TEST_CASE("iou on hand-checked masks") {
    const GridB a = mask_from({1, 1, 0, 0}, 2, 2);
    const GridB b = mask_from({1, 0, 1, 0}, 2, 2);
    CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0));
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, mask_from({0, 0, 1, 1}, 2, 2)) == 0.0);
}

TEST_CASE("iou is symmetric and empty unions count as a perfect match") {
    std::mt19937_64 rng(3);
    GridB a(5, 5), b(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            a(i, j) = rng() % 2;
            b(i, j) = rng() % 2;
        }
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(GridB::Constant(3, 3, false), GridB::Constant(3, 3, false)) == 1.0);
    CHECK_THROWS_AS(iou(a, GridB::Constant(4, 4, false)), ShapeError);
}

TEST_CASE("flipping matching cells never increases iou") {
    GridB gt = mask_from({1, 1, 1, 0, 0, 0, 1, 0, 1}, 3, 3);
    GridB pred = gt;
    double prev = iou(pred, gt);
    CHECK(prev == 1.0);
    for (int i = 0; i < 3; ++i) {
        pred(i, i) = !pred(i, i);
        const double cur = iou(pred, gt);
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("visibility filter is inclusive at one half") {
    Grid vis(1, 4);
    vis << 0.0, 0.4999, 0.5, 1.0;
    const GridB m = visibility_filter(vis);
    CHECK_FALSE(m(0, 0));
    CHECK_FALSE(m(0, 1));
    CHECK(m(0, 2));
    CHECK(m(0, 3));
    Grid bad(1, 1);
    bad << 1.2;
    CHECK_THROWS_AS(visibility_filter(bad), DomainError);
}

TEST_CASE("reported mIoU rows reproduce from their per-class entries") {
    CHECK(std::abs(miou_from_scores(0.815, 0.776, 0.517, 0.895, 0.978) - 0.796) < 0.0005);
    CHECK(std::abs(miou_from_scores(0.682, 0.764, 0.364, 0.858, 0.782) - 0.690) < 0.0005);
    // The third row's published mean carries the rounding of its five inputs
    // (each +-0.0005), so only a 0.001 reconstruction bound is attainable.
    CHECK(std::abs(miou_from_scores(0.666, 0.464, 0.176, 0.572, 0.449) - 0.466) < 0.001);
}

TEST_CASE("evaluate filters semantic classes by visibility but not occlusion") {
    // 2 x 2: bottom row is barely invisible (0.4), top row visible.
    GridI gt(2, 2);
    gt << static_cast<int>(SemClass::Vehicles), static_cast<int>(SemClass::Street),
        static_cast<int>(SemClass::Vehicles), static_cast<int>(SemClass::Street);
    Grid gt_vis(2, 2);
    gt_vis << 1.0, 1.0, 0.4, 0.4;

    GridI pred = gt;
    pred(1, 0) = static_cast<int>(SemClass::Street);  // error only in the invisible row
    Grid pred_vis(2, 2);
    pred_vis << 1.0, 1.0, 0.0, 1.0;

    const EvalReport rep = evaluate(pred, pred_vis, gt, gt_vis);
    CHECK(rep.iou_per_class.at(SemClass::Vehicles) == 1.0);
    CHECK(rep.iou_per_class.at(SemClass::Street) == 1.0);
    CHECK(rep.iou_per_class.at(SemClass::Markings) == 1.0);  // absent on both sides
    CHECK(rep.visible_cell_fraction == doctest::Approx(0.5));
    // Occlusion IoU uses all four cells: pred visible mask {1,1,0,1}, gt {1,1,0,0}.
    CHECK(rep.iou_occlusion == doctest::Approx(2.0 / 3.0));
    CHECK(rep.miou ==
          doctest::Approx(miou_from_scores(2.0 / 3.0, 1.0, 1.0, 1.0, 1.0)).epsilon(1e-12));
}

TEST_CASE("evaluate rejects malformed grids") {
    GridI gt = GridI::Zero(2, 2);
    const Grid ones = Grid::Ones(2, 2);
    CHECK_THROWS_AS(evaluate(GridI::Zero(3, 3), ones, gt, ones), ShapeError);
    GridI bad = gt;
    bad(0, 0) = 9;
    CHECK_THROWS_AS(evaluate(bad, ones, gt, ones), DataError);
    CHECK_THROWS_AS(evaluate(gt, ones, bad, ones), DataError);
}

TEST_CASE("degrading predictions monotonically lowers the semantic iou") {
    const int n = 8;
    GridI gt(n, n);
    std::mt19937_64 rng(17);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gt(i, j) = 1 + static_cast<int>(rng() % 4);
    const Grid ones = Grid::Ones(n, n);
    GridI pred = gt;
    double prev = evaluate(pred, ones, gt, ones).miou;
    for (int step = 0; step < 6; ++step) {
        // Corrupt one more cell per step.
        const int i = static_cast<int>(rng() % n);
        const int j = static_cast<int>(rng() % n);
        pred(i, j) = 1 + (gt(i, j) % 4);  // guaranteed wrong class
        const double cur = evaluate(pred, ones, gt, ones).miou;
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}
