#include <gtest/gtest.h>

#include <ffpr/simulator.hpp>

#include <cmath>
#include <numbers>

using namespace ffpr;

TEST(Geometry, PointInPolygonAndConvexity) {
    const std::vector<Point> square{{0, 0}, {0, 4}, {4, 4}, {4, 0}};
    EXPECT_TRUE(point_in_polygon(square, {2, 2}));
    EXPECT_FALSE(point_in_polygon(square, {5, 2}));
    EXPECT_TRUE(is_convex(square));
    const std::vector<Point> dart{{0, 0}, {2, 1}, {4, 0}, {2, 4}};
    EXPECT_FALSE(is_convex(dart));
    EXPECT_TRUE(is_convex(round_corners(square, 3)));
}

TEST(Crystal, ZeroDefectsGiveRealIndicator) {
    SimulatorOptions opts;
    opts.max_defects = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        RandomStream rng = RandomStream::substream(3, i);
        const ComplexImage x = sample_crystal(rng, opts);
        for (const auto& v : x) EXPECT_TRUE((v == Complex{} || v == Complex{1.0, 0.0}));
    }
}

TEST(Crystal, SingleDefectWindsOnce) {
    RandomStream rng(5);
    SimulatorOptions opts;
    opts.max_defects = 0;
    opts.min_vertices = 6;
    opts.min_radius = 0.4;
    CrystalSpec spec = draw_crystal(rng, opts);
    // Place the defect at the support centroid, nudged off the pixel lattice.
    const ComplexImage plain = render_crystal(spec);
    double sr = 0, sc = 0, cnt = 0;
    for (std::size_t r = 0; r < 32; ++r) {
        for (std::size_t c = 0; c < 32; ++c) {
            if (plain(r, c) != Complex{}) sr += double(r), sc += double(c), cnt += 1;
        }
    }
    const Point core{std::round(sr / cnt) + 0.37, std::round(sc / cnt) + 0.21};
    spec.defects = {{core, +1}};
    spec.q_scale = 1.0;
    const ComplexImage x = render_crystal(spec);

    // Walk the 3x3 ring of pixels around the core and sum wrapped phase steps.
    const auto r0 = static_cast<long>(std::floor(core.row)), c0 = static_cast<long>(std::floor(core.col));
    const std::vector<std::pair<long, long>> loop{{-1, -1}, {-1, 0}, {-1, 1}, {-1, 2}, {0, 2}, {1, 2}, {2, 2}, {2, 1},
                                                  {2, 0},   {2, -1}, {1, -1}, {0, -1}};
    double total = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const auto [ar, ac] = loop[k];
        const auto [br, bc] = loop[(k + 1) % loop.size()];
        const Complex a = x(std::size_t(r0 + ar), std::size_t(c0 + ac));
        const Complex b = x(std::size_t(r0 + br), std::size_t(c0 + bc));
        ASSERT_NE(a, Complex{});
        total += std::arg(b / a);
    }
    EXPECT_NEAR(std::abs(total), 2.0 * std::numbers::pi, 0.1);
}

TEST(Crystal, NonconvexFraction) {
    std::size_t nonconvex = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
        RandomStream rng = RandomStream::substream(11, i);
        const CrystalSpec spec = draw_crystal(rng);
        nonconvex += is_convex(spec.vertices) ? 0 : 1;
    }
    const double frac = static_cast<double>(nonconvex) / 1000.0;
    EXPECT_GE(frac, 0.3);
    EXPECT_LE(frac, 0.7);
}

TEST(Crystal, UnitMagnitudePhaseRangeAndContainment) {
    for (std::size_t i = 0; i < 200; ++i) {
        RandomStream rng = RandomStream::substream(13, i);
        const ComplexImage x = sample_crystal(rng);
        std::size_t pixels = 0;
        for (std::size_t r = 0; r < 32; ++r) {
            for (std::size_t c = 0; c < 32; ++c) {
                const Complex v = x(r, c);
                if (v == Complex{}) continue;
                ++pixels;
                EXPECT_LE(std::abs(std::abs(v) - 1.0), 2.3e-16);
                EXPECT_GT(std::arg(v), -std::numbers::pi);
                EXPECT_GE(r, 8u);
                EXPECT_LE(r, 23u);
                EXPECT_GE(c, 8u);
                EXPECT_LE(c, 23u);
            }
        }
        EXPECT_GE(pixels, 8u);
    }
}

TEST(Dataset, ShapeDeterminismAndDcBin) {
    DatasetSpec spec;
    spec.count = 40;
    spec.seed = 17;
    const auto a = generate_dataset(spec, 1);
    const auto b = generate_dataset(spec, 3);
    ASSERT_EQ(a.size(), 40u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].object, b[i].object);
        EXPECT_EQ(a[i].measurement, b[i].measurement);
        ASSERT_EQ(a[i].object.rows(), 32u);
        ASSERT_EQ(a[i].measurement.rows(), 64u);
        ASSERT_EQ(a[i].measurement.cols(), 64u);
        Complex sum{};
        for (const auto& v : a[i].object) sum += v;
        const double peak = *std::max_element(a[i].measurement.begin(), a[i].measurement.end());
        const double low = *std::min_element(a[i].measurement.begin(), a[i].measurement.end());
        EXPECT_GE(low, 0.0);
        EXPECT_NEAR(a[i].measurement[0], std::norm(sum), 1e-10 * std::norm(sum));
        EXPECT_LE(a[i].measurement[0], peak);
    }
    spec.count = 0;
    EXPECT_THROW(generate_dataset(spec), InvalidArgument);
}
