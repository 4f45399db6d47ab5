#include "fbev/occlusion.hpp"

#include <doctest.h>

#include <random>
#include <vector>

using namespace fbev;

namespace {

// Direct convolution reference.
Grid reference_map(const GridI& counts, int radius, double tau) {
    const int nx = static_cast<int>(counts.rows());
    const int ny = static_cast<int>(counts.cols());
    int area = 0;
    for (int dx = -radius; dx <= radius; ++dx)
        for (int dy = -radius; dy <= radius; ++dy)
            if (dx * dx + dy * dy <= radius * radius) ++area;
    Grid out(nx, ny);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            double local = 0;
            for (int dx = -radius; dx <= radius; ++dx)
                for (int dy = -radius; dy <= radius; ++dy) {
                    if (dx * dx + dy * dy > radius * radius) continue;
                    const int x = i + dx, y = j + dy;
                    if (x >= 0 && x < nx && y >= 0 && y < ny) local += counts(x, y);
                }
            out(i, j) = 1.0 - std::min(1.0, local / (tau * area));
        }
    return out;
}

GridI random_counts(int nx, int ny, int max_count, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, max_count);
    return GridI::NullaryExpr(nx, ny, [&]() { return u(rng); });
}

}  // namespace

TEST_CASE("occlusion map equals the convolution reference") {
    for (int radius : {0, 1, 2, 3}) {
        const GridI counts = random_counts(12, 9, 6, 100 + static_cast<uint64_t>(radius));
        const OcclusionMap map = occlusion_map(counts, radius, 1.7);
        const Grid want = reference_map(counts, radius, 1.7);
        CHECK((map.p_occluded - want).cwiseAbs().maxCoeff() == 0.0);
        CHECK(map.kernel_radius == radius);
        CHECK(map.tau == 1.7);
    }
}

TEST_CASE("radius zero reduces to the per-cell rule") {
    GridI counts(1, 3);
    counts << 0, 2, 10;
    const OcclusionMap map = occlusion_map(counts, 0, 4.0);
    CHECK(map.p_occluded(0, 0) == 1.0);
    CHECK(map.p_occluded(0, 1) == doctest::Approx(0.5));
    CHECK(map.p_occluded(0, 2) == 0.0);  // saturates at full visibility
}

TEST_CASE("diagonal corners stay outside the disc at radius 1") {
    GridI counts = GridI::Zero(3, 3);
    counts(0, 0) = 100;
    const OcclusionMap map = occlusion_map(counts, 1, 1.0);
    CHECK(map.p_occluded(0, 1) == 0.0);  // edge-adjacent sees the mass
    CHECK(map.p_occluded(1, 1) == 1.0);  // diagonal does not (1^2 + 1^2 > 1)
}

TEST_CASE("more points never increase occlusion") {
    const GridI a = random_counts(10, 10, 3, 7);
    GridI b = a;
    b(4, 4) += 5;
    b(0, 9) += 2;
    const Grid pa = occlusion_map(a, 2, 4.0).p_occluded;
    const Grid pb = occlusion_map(b, 2, 4.0).p_occluded;
    CHECK((pb.array() <= pa.array() + 1e-15).all());
}

TEST_CASE("saturated grids are idempotent under extra mass") {
    GridI counts = GridI::Constant(6, 6, 50);
    const Grid p = occlusion_map(counts, 1, 4.0).p_occluded;
    CHECK(p.isZero());
    counts.array() += 100;
    CHECK(occlusion_map(counts, 1, 4.0).p_occluded.isZero());
}

TEST_CASE("probabilities stay inside [0, 1]") {
    const GridI counts = random_counts(20, 20, 40, 3);
    const Grid p = occlusion_map(counts, 1, 0.5).p_occluded;
    CHECK((p.array() >= 0.0).all());
    CHECK((p.array() <= 1.0).all());
}

TEST_CASE("occupancy is the complement") {
    const GridI counts = random_counts(8, 8, 5, 21);
    const Grid p = occlusion_map(counts, 1, 4.0).p_occluded;
    const Grid vis = occupancy(p);
    CHECK((vis + p - Grid::Ones(8, 8)).cwiseAbs().maxCoeff() == 0.0);
    Grid bad = p;
    bad(0, 0) = 1.5;
    CHECK_THROWS_AS(occupancy(bad), DomainError);
}

TEST_CASE("parameter validation") {
    const GridI counts = GridI::Zero(2, 2);
    CHECK_THROWS_AS(occlusion_map(counts, -1, 4.0), ConfigError);
    CHECK_THROWS_AS(occlusion_map(counts, 1, 0.0), ConfigError);
    CHECK_THROWS_AS(occlusion_map(counts, 1, -2.0), ConfigError);
}
