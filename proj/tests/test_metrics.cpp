#include <gtest/gtest.h>

#include <ffpr/metrics.hpp>
#include <ffpr/simulator.hpp>

#include "oracles.hpp"

using namespace ffpr;

namespace {

SymmetryTransform random_allowable(const ComplexImage& x, RandomStream& rng) {
    SymmetryTransform g{0, 0, rng.coin(), rng.phase()};
    const ShiftRange r = allowable_shifts(g.flip ? conjugate_flip(x) : x);
    g.t1 = rng.integer(r.t1_min, r.t1_max);
    g.t2 = rng.integer(r.t2_min, r.t2_max);
    return g;
}

}  // namespace

TEST(Mse, Basics) {
    RandomStream rng(1);
    const ComplexImage a = oracle::random_image(rng, 4, 4);
    EXPECT_EQ(mse(a, a).raw, 0.0);
    EXPECT_EQ(mse(ComplexImage(1, 1, 1.0), ComplexImage(1, 1)).raw, 1.0);
    const ComplexImage b = oracle::random_image(rng, 4, 4);
    double direct = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dr = a[i].real() - b[i].real(), di = a[i].imag() - b[i].imag();
        direct += dr * dr + di * di;
    }
    const MetricValue v = mse(a, b);
    EXPECT_NEAR(v.raw, direct, 1e-12 * direct);
    EXPECT_NEAR(v.per_pixel, direct / 16.0, 1e-12 * direct);
    EXPECT_NEAR(v.relative, direct / squared_norm(a), 1e-12);
    EXPECT_THROW(mse(a, ComplexImage(4, 5)), DimensionError);
}

TEST(PaMse, ScaleAndPhaseAreInvisible) {
    RandomStream rng(2);
    for (int i = 0; i < 20; ++i) {
        const ComplexImage a = oracle::random_image(rng, 8, 8);
        const double eta = rng.uniform(0.1, 5.0), theta = rng.phase();
        ComplexImage b = a;
        for (auto& v : b) v *= eta * std::polar(1.0, theta);
        const MetricValue m = pa_mse(a, b);
        EXPECT_LE(m.raw, 1e-12 * squared_norm(a));
        EXPECT_NEAR(m.eta, 1.0 / eta, 1e-12);
        EXPECT_NEAR(std::abs(std::polar(1.0, m.optimal_transform.theta) - std::polar(1.0, -theta)), 0.0, 1e-10);
    }
}

TEST(PaMse, OrthogonalPairAndZeroReconstruction) {
    ComplexImage a(1, 2), b(1, 2);
    a[0] = 2.0;
    b[1] = Complex{0.0, 3.0};
    EXPECT_DOUBLE_EQ(pa_mse(a, b).raw, 4.0);
    const MetricValue z = pa_mse(a, ComplexImage(1, 2));
    EXPECT_TRUE(z.degenerate);
    EXPECT_EQ(z.eta, 0.0);
    EXPECT_DOUBLE_EQ(z.raw, 4.0);
}

TEST(PaMse, ClosedFormMatchesDirectSearch) {
    RandomStream rng(3);
    for (int i = 0; i < 10; ++i) {
        const ComplexImage a = oracle::random_image(rng, 8, 8);
        const ComplexImage b = oracle::random_image(rng, 8, 8);
        EXPECT_NEAR(pa_mse(a, b).raw, oracle::pa_mse_search(a, b), 1e-8);
    }
}

TEST(PaMse, BoundsAndCauchySchwarz) {
    RandomStream rng(4);
    for (int i = 0; i < 50; ++i) {
        const ComplexImage a = oracle::random_image(rng, 6, 5);
        const ComplexImage b = oracle::random_image(rng, 6, 5);
        const MetricValue m = pa_mse(a, b);
        EXPECT_GE(m.raw, 0.0);
        EXPECT_LE(m.raw, squared_norm(a));
        EXPECT_LE(m.relative, 1.0);
        EXPECT_LE(m.eta * std::sqrt(squared_norm(b)), std::sqrt(squared_norm(a)) * (1 + 1e-12));
        EXPECT_LE(m.raw, mse(a, b).raw);
    }
}

TEST(PaMse, WithoutScaleFit) {
    RandomStream rng(5);
    const ComplexImage a = oracle::random_image(rng, 4, 4);
    ComplexImage b = a;
    for (auto& v : b) v *= std::polar(1.0, 1.0);
    MetricOptions opts;
    opts.scale_adjust = false;
    EXPECT_LE(pa_mse(a, b, opts).raw, 1e-12);
    for (auto& v : b) v *= 2.0;
    EXPECT_NEAR(pa_mse(a, b, opts).raw, squared_norm(a), 1e-10);  // ||a - 2a||^2
}

TEST(SaMse, ZeroUnderSymmetries) {
    RandomStream rng(6);
    for (int i = 0; i < 10; ++i) {
        const ComplexImage a = oracle::random_blob(rng, 8, 8, 2, 1, 4, 3);
        const ComplexImage b = apply_symmetry(a, random_allowable(a, rng));
        EXPECT_LE(sa_mse(a, b).raw, 1e-10);
        EXPECT_LE(sa_mse_fast(a, b).raw, 1e-10);
    }
}

TEST(SaMse, RecoversTranslation) {
    RandomStream rng(7);
    const ComplexImage a = oracle::random_blob(rng, 8, 8, 1, 1, 3, 3);
    const ComplexImage b = translate(a, 3, 2);
    for (const MetricValue& m : {sa_mse(a, b), sa_mse_fast(a, b)}) {
        EXPECT_LE(m.raw, 1e-12);
        EXPECT_EQ(m.optimal_transform.t1, -3);
        EXPECT_EQ(m.optimal_transform.t2, -2);
        EXPECT_FALSE(m.optimal_transform.flip);
    }
    EXPECT_LE(sa_mse_fast(a, a).raw, 1e-12);
}

TEST(SaMse, ZeroReconstructionIsDegenerate) {
    RandomStream rng(8);
    const ComplexImage a = oracle::random_image(rng, 4, 4);
    for (const MetricValue& m : {sa_mse(a, ComplexImage(4, 4)), sa_mse_fast(a, ComplexImage(4, 4))}) {
        EXPECT_TRUE(m.degenerate);
        EXPECT_DOUBLE_EQ(m.raw, squared_norm(a));
    }
}

TEST(SaMse, FastAndExhaustiveAgreeWithEnumerationOracle) {
    RandomStream rng(9);
    for (int i = 0; i < 30; ++i) {
        const std::size_t n = 3 + static_cast<std::size_t>(rng.integer(0, 13));
        const ComplexImage a = oracle::random_blob(rng, n, n, 0, 0, n / 2 + 1, n / 2 + 1);
        const ComplexImage b = i % 3 == 0 ? oracle::random_image(rng, n, n)
                                          : oracle::random_blob(rng, n, n, n / 3, n / 4, n / 2, n / 2 + 1);
        const double exhaustive = sa_mse(a, b).raw;
        EXPECT_NEAR(sa_mse_fast(a, b).raw, exhaustive, 1e-9) << "n=" << n;
        if (n <= 8) EXPECT_NEAR(oracle::sa_enumerate(a, b), exhaustive, 1e-9) << "n=" << n;
    }
}

TEST(SaMse, InvariantUnderReconstructionSymmetriesAndOrdered) {
    RandomStream rng(10);
    for (std::size_t i = 0; i < 10; ++i) {
        RandomStream crng = RandomStream::substream(10, i);
        const ComplexImage a = sample_crystal(crng);
        const ComplexImage b = sample_crystal(crng);
        const MetricValue base = sa_mse_fast(a, b);
        EXPECT_NEAR(sa_mse_fast(a, apply_symmetry(b, random_allowable(b, rng))).raw, base.raw, 1e-8);
        EXPECT_NEAR(sa_mse(a, apply_symmetry(b, random_allowable(b, rng))).raw, base.raw, 1e-8);
        EXPECT_LE(base.raw, pa_mse(a, b).raw + 1e-12);
        EXPECT_LE(pa_mse(a, b).raw, mse(a, b).raw + 1e-12);
    }
}
