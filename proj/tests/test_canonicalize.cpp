#include <gtest/gtest.h>

#include <ffpr/canonicalize.hpp>
#include <ffpr/simulator.hpp>

#include "oracles.hpp"

using namespace ffpr;

namespace {

double rel_sup(const Measurement& a, const Measurement& b) {
    double peak = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        peak = std::max(peak, std::abs(a[i]));
        diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    return diff / peak;
}

ComplexImage crystal(std::uint64_t seed, std::size_t index) {
    RandomStream rng = RandomStream::substream(seed, index);
    return sample_crystal(rng);
}

SymmetryTransform random_allowable(const ComplexImage& x, RandomStream& rng) {
    SymmetryTransform g;
    g.flip = rng.coin();
    const ShiftRange r = allowable_shifts(g.flip ? conjugate_flip(x) : x);
    g.t1 = rng.integer(r.t1_min, r.t1_max);
    g.t2 = rng.integer(r.t2_min, r.t2_max);
    g.theta = rng.phase();
    return g;
}

}  // namespace

TEST(CenterSupport, SinglePixelMovesToCenter) {
    ComplexImage x(5, 5);
    x(0, 0) = Complex{0.5, -0.25};
    const ComplexImage c = center_support(x);
    EXPECT_EQ(c(2, 2), x(0, 0));
    EXPECT_EQ(max_abs(c), std::abs(x(0, 0)));
}

TEST(CenterSupport, EvenFrameUsesFloorConvention) {
    ComplexImage x(6, 4);
    x(5, 3) = 1.0;
    x(4, 3) = 1.0;  // box rows 4..5, midpoint floor(4.5) = 4 -> target 2
    const ComplexImage c = center_support(x);
    const auto box = support_box(c);
    ASSERT_TRUE(box);
    EXPECT_EQ(box->row_min, 2u);
    EXPECT_EQ(box->col_min, 1u);
}

TEST(CenterSupport, IdempotentAndTranslationInvariant) {
    RandomStream rng(21);
    for (std::size_t i = 0; i < 20; ++i) {
        const ComplexImage x = crystal(21, i);
        const ComplexImage c = center_support(x);
        EXPECT_EQ(center_support(c), c);
        const ShiftRange r = allowable_shifts(x);
        const ComplexImage moved = translate(x, rng.integer(r.t1_min, r.t1_max), rng.integer(r.t2_min, r.t2_max));
        EXPECT_EQ(center_support(moved), c);
    }
}

TEST(CenterSupport, EmptyImageIsRejected) {
    EXPECT_THROW(center_support(ComplexImage(4, 4)), EmptySupportError);
    EXPECT_THROW(break_symmetry(ComplexImage(4, 4)), EmptySupportError);
}

TEST(CheckCanonical, AllOnesIsCanonicalAndDegenerate) {
    const CanonicalityReport r = check_canonical(PhaseMatrix(4, 4, Complex{1.0, 0.0}));
    EXPECT_TRUE(r.is_canonical);
    EXPECT_TRUE(r.degenerate);
    EXPECT_FALSE(r.second_entry_in_upper_half);
    EXPECT_EQ(r.corner_phase_error, 0.0);
}

TEST(CheckCanonical, RotatedCornerIsRejected) {
    PhaseMatrix omega(4, 4, std::polar(1.0, 0.3));
    omega[0] = std::polar(1.0, 0.1);
    const CanonicalityReport r = check_canonical(omega);
    EXPECT_FALSE(r.is_canonical);
    EXPECT_TRUE(r.second_entry_in_upper_half);
    EXPECT_NEAR(r.corner_phase_error, std::abs(std::polar(1.0, 0.1) - 1.0), 1e-15);
}

TEST(CheckCanonical, LowerHalfAndTieBreak) {
    PhaseMatrix omega(3, 3, Complex{1.0, 0.0});
    omega[1] = std::polar(1.0, -0.2);
    EXPECT_FALSE(check_canonical(omega).is_canonical);
    EXPECT_TRUE(needs_conjugation(omega));

    // Second entry on the real axis: the first off-axis entry in row-major order decides.
    omega[1] = Complex{-1.0, 0.0};
    omega[4] = std::polar(1.0, -0.5);
    omega[7] = std::polar(1.0, 0.5);
    EXPECT_TRUE(check_canonical(omega).degenerate);
    EXPECT_FALSE(check_canonical(omega).is_canonical);
    omega[4] = std::polar(1.0, 0.5);
    EXPECT_TRUE(check_canonical(omega).is_canonical);
}

TEST(BreakSymmetry, RealSymmetricInputIsOnlyCentered) {
    ComplexImage x(9, 9);
    for (std::size_t r = 1; r < 6; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            const double dr = double(r) - 3.0, dc = double(c) - 2.0;
            x(r, c) = std::exp(-(dr * dr + dc * dc) / 3.0);
        }
    }
    const BreakTrace t = break_symmetry_traced(x);
    EXPECT_FALSE(t.conjugated);
    EXPECT_LE(max_abs_diff(t.result, center_support(x)), 1e-12);
    EXPECT_LE(std::abs(t.before_branch[0] - 1.0), 1e-12);
}

TEST(BreakSymmetry, PostConditionsOnSimulatedSamples) {
    const CanonicalizeOptions opts;
    for (std::size_t i = 0; i < 100; ++i) {
        const ComplexImage x = crystal(31, i);
        const ComplexImage b = break_symmetry(x, opts);
        // Magnitudes untouched relative to the centered input.
        EXPECT_LE(rel_sup(forward_measure(b), forward_measure(center_support(x))), 1e-10) << i;
        const CanonicalityReport r = check_canonical(canonical_phase(b, opts), opts);
        EXPECT_TRUE(r.is_canonical) << i;
        EXPECT_LE(r.corner_phase_error, opts.phase_tolerance);
        // The phase transfer also fixes the zero-origin DC phase.
        const FourierField plain = oversampled_dft(b, 64, 64);
        EXPECT_LE(std::abs(plain[0] / std::abs(plain[0]) - 1.0), 1e-9);
        EXPECT_LE(max_abs_diff(break_symmetry(b, opts), b), 1e-8) << i;
    }
}

TEST(BreakSymmetry, GlobalPhaseAndFlipCollapse) {
    RandomStream rng(41);
    for (std::size_t i = 0; i < 30; ++i) {
        const ComplexImage x = crystal(41, i);
        const ComplexImage b = break_symmetry(x);
        EXPECT_LE(max_abs_diff(break_symmetry(apply_global_phase(x, rng.phase())), b), 1e-8) << i;
        EXPECT_LE(max_abs_diff(break_symmetry(conjugate_flip(x)), b), 1e-8) << i;
        EXPECT_LE(max_abs_diff(break_symmetry(apply_symmetry(x, random_allowable(x, rng))), b), 1e-8) << i;
    }
}

TEST(BreakSymmetry, ConjugationBranchConjugatesExactly) {
    int fired = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        const ComplexImage x = crystal(51, i);
        for (const ComplexImage& candidate : {x, conjugate_flip(x)}) {
            const BreakTrace t = break_symmetry_traced(candidate);
            if (!t.conjugated) continue;
            ++fired;
            for (std::size_t k = 0; k < t.before_branch.size(); ++k) {
                ASSERT_EQ(t.after_branch[k], std::conj(t.before_branch[k]));
            }
            // And the output's own phase matrix is that conjugate up to round-off.
            const PhaseMatrix out = canonical_phase(t.result);
            double worst = 0.0;
            for (std::size_t k = 0; k < out.size(); ++k) worst = std::max(worst, std::abs(out[k] - t.after_branch[k]));
            EXPECT_LE(worst, 1e-6);
        }
    }
    EXPECT_GT(fired, 0);
}

TEST(BreakSymmetry, VanishingDcIsReported) {
    ComplexImage x(4, 4);
    x(1, 1) = 1.0;
    x(1, 2) = -1.0;
    EXPECT_THROW(break_symmetry(x), VanishingDcError);
}

TEST(BreakSymmetry, RoundTripKeepsMeasurement) {
    RandomStream rng(61);
    const ComplexImage x = oracle::random_blob(rng, 16, 16, 3, 5, 6, 7);
    const ComplexImage b = break_symmetry(x);
    EXPECT_LE(rel_sup(forward_measure(b), forward_measure(x)), 1e-10);
}

TEST(CanonicalizeDataset, EmptyAndSingleton) {
    EXPECT_TRUE(canonicalize_dataset({}).records.empty());
    const CanonicalBatch one = canonicalize_dataset({crystal(71, 0)});
    ASSERT_EQ(one.records.size(), 1u);
    ASSERT_TRUE(one.records[0]);
    EXPECT_TRUE(check_canonical(canonical_phase(one.records[0]->object)).is_canonical);
    EXPECT_EQ(one.records[0]->measurement, forward_measure(one.records[0]->object));
}

TEST(CanonicalizeDataset, SymmetricCopiesCollapseAndFailuresAreIsolated) {
    RandomStream rng(81);
    std::vector<ComplexImage> inputs;
    for (std::size_t i = 0; i < 6; ++i) {
        const ComplexImage x = crystal(81, i);
        inputs.push_back(x);
        inputs.push_back(apply_symmetry(x, random_allowable(x, rng)));
    }
    inputs.insert(inputs.begin() + 3, ComplexImage(32, 32));  // empty record at index 3
    const CanonicalBatch batch = canonicalize_dataset(inputs, {}, 2);
    ASSERT_EQ(batch.failures.size(), 1u);
    EXPECT_EQ(batch.failures[0].index, 3u);
    EXPECT_FALSE(batch.records[3]);
    std::vector<const CanonicalRecord*> ok;
    for (const auto& r : batch.records) {
        if (r) ok.push_back(&*r);
    }
    ASSERT_EQ(ok.size(), 12u);
    for (std::size_t j = 0; j < ok.size(); j += 2) {
        EXPECT_LE(max_abs_diff(ok[j]->object, ok[j + 1]->object), 1e-8) << j;
    }
}
