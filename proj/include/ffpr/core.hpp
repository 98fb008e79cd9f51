#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "errors.hpp"
#include "fft.hpp"
#include "grid.hpp"

namespace ffpr {

/// Relative magnitude below which a pixel counts as background.
inline constexpr double kSupportEpsilon = 1e-8;

/// Composition of the three measurement-preserving symmetries.
/// Applied in a fixed order: conjugate flip, then translation, then global phase.
struct SymmetryTransform {
    std::int64_t t1 = 0;
    std::int64_t t2 = 0;
    bool flip = false;
    double theta = 0.0;  // radians, in (-pi, pi]

    friend bool operator==(const SymmetryTransform&, const SymmetryTransform&) = default;
};

/// Wrap an angle to (-pi, pi].
inline double wrap_phase(double a) {
    double w = std::remainder(a, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

/// Inclusive bounding box of the nonzero content.
struct SupportBox {
    std::size_t row_min, row_max, col_min, col_max;

    std::size_t height() const { return row_max - row_min + 1; }
    std::size_t width() const { return col_max - col_min + 1; }
    friend bool operator==(const SupportBox&, const SupportBox&) = default;
};

/// Bounding box of entries with |x| > epsilon * max|x|; empty for an all-zero image.
template <class Tag>
std::optional<SupportBox> support_box(const Grid<Complex, Tag>& x, double epsilon = kSupportEpsilon) {
    const double threshold = epsilon * max_abs(x);
    std::optional<SupportBox> box;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double m = std::abs(x(r, c));
            if (m == 0.0 || m <= threshold) continue;
            if (!box) {
                box = SupportBox{r, r, c, c};
            } else {
                box->row_min = std::min(box->row_min, r);
                box->row_max = std::max(box->row_max, r);
                box->col_min = std::min(box->col_min, c);
                box->col_max = std::max(box->col_max, c);
            }
        }
    }
    return box;
}

/// Range of integer shifts that keep the support inside the frame.
struct ShiftRange {
    std::int64_t t1_min, t1_max, t2_min, t2_max;

    bool contains(std::int64_t t1, std::int64_t t2) const {
        return t1 >= t1_min && t1 <= t1_max && t2 >= t2_min && t2 <= t2_max;
    }
};

inline ShiftRange allowable_shifts(const ComplexImage& x, double epsilon = kSupportEpsilon) {
    const auto box = support_box(x, epsilon);
    if (!box) return {0, 0, 0, 0};
    const auto rows = static_cast<std::int64_t>(x.rows());
    const auto cols = static_cast<std::int64_t>(x.cols());
    return {-static_cast<std::int64_t>(box->row_min), rows - 1 - static_cast<std::int64_t>(box->row_max),
            -static_cast<std::int64_t>(box->col_min), cols - 1 - static_cast<std::int64_t>(box->col_max)};
}

/// Number of frequency bins for an oversampling factor: ceil(oversample * n).
inline std::size_t oversampled_extent(std::size_t n, double oversample) {
    if (!(oversample > 0.0) || !std::isfinite(oversample)) {
        throw DimensionError("oversampling factor must be positive and finite");
    }
    // Small slack so that e.g. 2.0 * 32 never rounds up to 65.
    const double m = std::ceil(oversample * static_cast<double>(n) - 1e-9);
    return static_cast<std::size_t>(m);
}

/// Unnormalized DFT of x zero-padded to m1 x m2.
inline FourierField oversampled_dft(const ComplexImage& x, std::size_t m1, std::size_t m2) {
    if (m1 < x.rows() || m2 < x.cols()) {
        throw DimensionError("oversampled frame " + std::to_string(m1) + "x" + std::to_string(m2) +
                             " is smaller than the image " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.cols()));
    }
    FourierField f(m1, m2);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) f(r, c) = x(r, c);
    }
    fft::transform(f.values(), m1, m2, fft::Direction::Forward);
    return f;
}

/// Inverse DFT (with the full 1/(M1*M2) factor) cropped to the top-left n1 x n2 window.
inline ComplexImage inverse_oversampled_dft(const FourierField& f, std::size_t n1, std::size_t n2) {
    if (n1 > f.rows() || n2 > f.cols()) {
        throw DimensionError("crop window " + std::to_string(n1) + "x" + std::to_string(n2) +
                             " exceeds the field " + std::to_string(f.rows()) + "x" +
                             std::to_string(f.cols()));
    }
    FourierField work = f;
    fft::transform(work.values(), work.rows(), work.cols(), fft::Direction::Backward);
    const double scale = 1.0 / static_cast<double>(work.size());
    ComplexImage x(n1, n2);
    for (std::size_t r = 0; r < n1; ++r) {
        for (std::size_t c = 0; c < n2; ++c) x(r, c) = work(r, c) * scale;
    }
    return x;
}

/// Elementwise squared magnitude of a Fourier field.
inline Measurement intensity(const FourierField& f) {
    Measurement y(f.rows(), f.cols());
    for (std::size_t i = 0; i < f.size(); ++i) y[i] = std::norm(f[i]);
    return y;
}

/// Y = |F(X)|^2 on an explicit m1 x m2 frame. Requires m >= 2n - 1 on both axes.
inline Measurement forward_measure(const ComplexImage& x, std::size_t m1, std::size_t m2) {
    if (x.empty()) throw DimensionError("cannot measure an empty image");
    if (m1 + 1 < 2 * x.rows() || m2 + 1 < 2 * x.cols()) {
        throw DimensionError("measurement frame " + std::to_string(m1) + "x" + std::to_string(m2) +
                             " violates M >= 2N - 1 for a " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.cols()) + " image");
    }
    return intensity(oversampled_dft(x, m1, m2));
}

inline Measurement forward_measure(const ComplexImage& x, double oversample = 2.0) {
    return forward_measure(x, oversampled_extent(x.rows(), oversample),
                           oversampled_extent(x.cols(), oversample));
}

/// x(n1, n2) -> conj(x(N1-1-n1, N2-1-n2)).
inline ComplexImage conjugate_flip(const ComplexImage& x) {
    ComplexImage out(x.rows(), x.cols());
    const std::size_t last_r = x.rows() - 1;
    const std::size_t last_c = x.cols() - 1;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = std::conj(x(last_r - r, last_c - c));
    }
    return out;
}

/// Non-circular shift by (t1, t2). Throws if any support pixel would leave the frame.
inline ComplexImage translate(const ComplexImage& x, std::int64_t t1, std::int64_t t2,
                              double epsilon = kSupportEpsilon) {
    if (t1 == 0 && t2 == 0) return x;
    if (!allowable_shifts(x, epsilon).contains(t1, t2)) {
        throw OutOfBoundsError("translation (" + std::to_string(t1) + ", " + std::to_string(t2) +
                               ") moves the support outside the frame");
    }
    const auto rows = static_cast<std::int64_t>(x.rows());
    const auto cols = static_cast<std::int64_t>(x.cols());
    ComplexImage out(x.rows(), x.cols());
    for (std::int64_t r = 0; r < rows; ++r) {
        const std::int64_t src_r = r - t1;
        if (src_r < 0 || src_r >= rows) continue;
        for (std::int64_t c = 0; c < cols; ++c) {
            const std::int64_t src_c = c - t2;
            if (src_c < 0 || src_c >= cols) continue;
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
                x(static_cast<std::size_t>(src_r), static_cast<std::size_t>(src_c));
        }
    }
    return out;
}

inline ComplexImage apply_global_phase(ComplexImage x, double theta) {
    if (theta == 0.0) return x;
    const Complex rot = std::polar(1.0, theta);
    for (auto& v : x) v *= rot;
    return x;
}

inline ComplexImage apply_symmetry(const ComplexImage& x, const SymmetryTransform& g,
                                   double epsilon = kSupportEpsilon) {
    if (!(g.theta > -std::numbers::pi && g.theta <= std::numbers::pi)) {
        throw InvalidArgument("global phase must lie in (-pi, pi]");
    }
    ComplexImage out = g.flip ? conjugate_flip(x) : x;
    out = translate(out, g.t1, g.t2, epsilon);
    return apply_global_phase(std::move(out), g.theta);
}

/// Integer k * t reduced into [0, m).
inline std::int64_t reduced_product(std::int64_t k, std::int64_t t, std::int64_t m) {
    const std::int64_t r = (k % m) * (t % m) % m;
    return r < 0 ? r + m : r;
}

/// Unit-modulus ramp R with F(translate(x, t1, t2)) = R * F(x) under the
/// forward e^{-2 pi i k n / M} kernel: R(k1, k2) = exp(-2 pi i (k1 t1 / M1 + k2 t2 / M2)).
inline PhaseMatrix fourier_phase_ramp(std::int64_t t1, std::int64_t t2, std::size_t m1, std::size_t m2) {
    PhaseMatrix ramp(m1, m2);
    const auto M1 = static_cast<std::int64_t>(m1);
    const auto M2 = static_cast<std::int64_t>(m2);
    for (std::int64_t k1 = 0; k1 < M1; ++k1) {
        const std::int64_t a = reduced_product(k1, t1, M1);
        for (std::int64_t k2 = 0; k2 < M2; ++k2) {
            const std::int64_t b = reduced_product(k2, t2, M2);
            if (a == 0 && b == 0) {
                ramp(k1, k2) = Complex{1.0, 0.0};
                continue;
            }
            const double angle = -2.0 * std::numbers::pi *
                                 (static_cast<double>(a) / static_cast<double>(M1) +
                                  static_cast<double>(b) / static_cast<double>(M2));
            ramp(static_cast<std::size_t>(k1), static_cast<std::size_t>(k2)) = std::polar(1.0, angle);
        }
    }
    return ramp;
}

}  // namespace ffpr
