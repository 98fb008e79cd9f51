#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

#include "core.hpp"

namespace ffpr {

struct MetricOptions {
    /// Fit the positive scale eta as well as the global phase. When false the
    /// phase-adjusted error is min over theta of ||a - e^{i theta} b||^2.
    bool scale_adjust = true;
    double support_epsilon = kSupportEpsilon;
    /// Candidates within this fraction of ||a||^2 of the best count as tied;
    /// ties go to the lexicographically smallest (flip, t1, t2).
    double tie_tolerance = 1e-12;
};

struct MetricValue {
    double raw = 0.0;        // sum of squared errors
    double per_pixel = 0.0;  // raw / (N1 * N2)
    double relative = 0.0;   // raw / ||a||^2
    double eta = 1.0;        // optimal scale applied to b
    SymmetryTransform optimal_transform{};  // theta holds the optimal global phase
    /// b was identically zero, so no phase or scale could be fitted.
    bool degenerate = false;
};

namespace detail {

inline void require_same_shape(const ComplexImage& a, const ComplexImage& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("metric operands differ in shape: " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
}

inline void finish(MetricValue& v, const ComplexImage& a) {
    v.raw = std::max(0.0, v.raw);
    v.per_pixel = v.raw / static_cast<double>(a.size());
    const double norm_a = squared_norm(a);
    v.relative = norm_a > 0.0 ? v.raw / norm_a : (v.raw == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
}

/// Phase-adjusted error from the three sufficient statistics.
inline double phase_adjusted_raw(double norm_a, double norm_b, double abs_inner, bool scale_adjust) {
    if (scale_adjust) return norm_a - abs_inner * abs_inner / norm_b;
    return norm_a + norm_b - 2.0 * abs_inner;
}

}  // namespace detail

inline MetricValue mse(const ComplexImage& a, const ComplexImage& b) {
    detail::require_same_shape(a, b);
    MetricValue v;
    for (std::size_t i = 0; i < a.size(); ++i) v.raw += std::norm(a[i] - b[i]);
    detail::finish(v, a);
    return v;
}

/// min over theta, eta > 0 of ||a - eta e^{i theta} b||^2, in closed form:
/// ||a||^2 - |<a,b>|^2 / ||b||^2 with eta = |<a,b>| / ||b||^2, theta = -arg<a,b>.
inline MetricValue pa_mse(const ComplexImage& a, const ComplexImage& b, const MetricOptions& opts = {}) {
    detail::require_same_shape(a, b);
    MetricValue v;
    const double norm_a = squared_norm(a);
    const double norm_b = squared_norm(b);
    if (norm_b == 0.0) {
        v.raw = norm_a;
        v.eta = 0.0;
        v.degenerate = true;
        detail::finish(v, a);
        return v;
    }
    const Complex ip = inner_product(a, b);
    const double abs_ip = std::abs(ip);
    v.raw = detail::phase_adjusted_raw(norm_a, norm_b, abs_ip, opts.scale_adjust);
    v.eta = opts.scale_adjust ? abs_ip / norm_b : 1.0;
    v.optimal_transform.theta = abs_ip > 0.0 ? wrap_phase(-std::arg(ip)) : 0.0;
    detail::finish(v, a);
    return v;
}

/// Symmetry-adjusted error by exhaustive enumeration of both flip states and
/// every allowable translation of b.
inline MetricValue sa_mse(const ComplexImage& a, const ComplexImage& b, const MetricOptions& opts = {}) {
    detail::require_same_shape(a, b);
    if (squared_norm(b) == 0.0) return pa_mse(a, b, opts);

    const double tie = opts.tie_tolerance * std::max(squared_norm(a), 1.0);
    MetricValue best;
    bool have = false;
    for (int flip = 0; flip < 2; ++flip) {
        const ComplexImage bf = flip ? conjugate_flip(b) : b;
        const ShiftRange range = allowable_shifts(bf, opts.support_epsilon);
        for (auto t1 = range.t1_min; t1 <= range.t1_max; ++t1) {
            for (auto t2 = range.t2_min; t2 <= range.t2_max; ++t2) {
                MetricValue v = pa_mse(a, translate(bf, t1, t2, opts.support_epsilon), opts);
                if (!have || v.raw < best.raw - tie) {
                    v.optimal_transform.t1 = t1;
                    v.optimal_transform.t2 = t2;
                    v.optimal_transform.flip = flip != 0;
                    best = v;
                    have = true;
                }
            }
        }
    }
    return best;
}

/// Same contract as sa_mse. |<a, translate(b, t)>| is evaluated for every t at
/// once as a circular cross-correlation on a frame of at least 2N - 1 per axis,
/// where no shift in range can alias. The winning transform is then rescored
/// exactly with pa_mse.
inline MetricValue sa_mse_fast(const ComplexImage& a, const ComplexImage& b, const MetricOptions& opts = {}) {
    detail::require_same_shape(a, b);
    const double norm_b = squared_norm(b);
    if (norm_b == 0.0) return pa_mse(a, b, opts);
    const double norm_a = squared_norm(a);

    const std::size_t p1 = 2 * a.rows();
    const std::size_t p2 = 2 * a.cols();
    const auto P1 = static_cast<std::int64_t>(p1);
    const auto P2 = static_cast<std::int64_t>(p2);
    const FourierField fa = oversampled_dft(a, p1, p2);

    const double tie = opts.tie_tolerance * std::max(norm_a, 1.0);
    double best_raw = std::numeric_limits<double>::infinity();
    SymmetryTransform best_g{};
    for (int flip = 0; flip < 2; ++flip) {
        const ComplexImage bf = flip ? conjugate_flip(b) : b;
        FourierField prod = oversampled_dft(bf, p1, p2);
        for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = fa[i] * std::conj(prod[i]);
        // corr(t) = sum_m a(m + t) conj(bf(m)), indexed by t mod P.
        const ComplexImage corr = inverse_oversampled_dft(prod, p1, p2);
        const ShiftRange range = allowable_shifts(bf, opts.support_epsilon);
        for (auto t1 = range.t1_min; t1 <= range.t1_max; ++t1) {
            const auto r = static_cast<std::size_t>((t1 % P1 + P1) % P1);
            for (auto t2 = range.t2_min; t2 <= range.t2_max; ++t2) {
                const auto c = static_cast<std::size_t>((t2 % P2 + P2) % P2);
                const double raw =
                    detail::phase_adjusted_raw(norm_a, norm_b, std::abs(corr(r, c)), opts.scale_adjust);
                if (raw < best_raw - tie) {
                    best_raw = raw;
                    best_g = SymmetryTransform{t1, t2, flip != 0, 0.0};
                }
            }
        }
    }
    ComplexImage shifted = translate(best_g.flip ? conjugate_flip(b) : b, best_g.t1, best_g.t2, opts.support_epsilon);
    MetricValue v = pa_mse(a, shifted, opts);
    v.optimal_transform.t1 = best_g.t1;
    v.optimal_transform.t2 = best_g.t2;
    v.optimal_transform.flip = best_g.flip;
    return v;
}

}  // namespace ffpr
