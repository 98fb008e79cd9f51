#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"

namespace ffpr {

enum class Centering { BoundingBox, Centroid };

struct CanonicalizeOptions {
    double oversample = 2.0;
    /// Translate the support to the frame center before the phase edits.
    bool center = true;
    Centering centering = Centering::BoundingBox;
    double support_epsilon = kSupportEpsilon;
    double phase_tolerance = 1e-9;
    double imag_tolerance = 1e-9;
    /// |X(0,0)| must exceed this times N1 * N2 * max|x|.
    double dc_tolerance = 1e-12;
    /// Fourier bins with magnitude at or below this fraction of the peak carry no
    /// usable phase; they get phase 1 and are skipped by the tie-break scan.
    double magnitude_floor = 1e-9;
};

/// Outcome of testing a phase matrix against the canonical set: corner entry
/// equal to 1 and second entry of row 0 in the open upper half circle.
struct CanonicalityReport {
    bool is_canonical = false;
    double corner_phase_error = 0.0;
    bool second_entry_in_upper_half = false;
    /// Second entry lies on the real axis, where the upper-half test is
    /// replaced by the row-major tie-break.
    bool degenerate = false;
};

/// Elementwise phase z/|z|; bins at or below floor * max|z| get phase 1.
inline PhaseMatrix phase_of(const FourierField& f, double magnitude_floor = 1e-9) {
    const double threshold = magnitude_floor * max_abs(f);
    PhaseMatrix omega(f.rows(), f.cols(), Complex{1.0, 0.0});
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double m = std::abs(f[i]);
        if (m > threshold && m > 0.0) omega[i] = f[i] / m;
    }
    return omega;
}

/// Whether the conjugation branch applies to an already phase-transferred matrix.
/// Off the real axis the sign of Im Omega(0,1) decides; on it, the first entry in
/// row-major order with a clearly nonzero imaginary part decides, and a matrix
/// with no such entry is self-conjugate and left alone.
inline bool needs_conjugation(const PhaseMatrix& omega, double imag_tolerance = 1e-9) {
    if (omega.size() < 2) return false;
    const double second = omega[1].imag();
    if (second > imag_tolerance) return false;
    if (second < -imag_tolerance) return true;
    for (const auto& w : omega) {
        if (std::abs(w.imag()) > imag_tolerance) return w.imag() < 0.0;
    }
    return false;
}

inline CanonicalityReport check_canonical(const PhaseMatrix& omega, const CanonicalizeOptions& opts = {}) {
    CanonicalityReport report;
    if (omega.empty()) return report;
    report.corner_phase_error = std::abs(omega[0] - Complex{1.0, 0.0});
    if (omega.size() >= 2) {
        report.second_entry_in_upper_half = omega[1].imag() > opts.imag_tolerance;
        report.degenerate = std::abs(omega[1].imag()) <= opts.imag_tolerance;
    }
    bool unit = true;
    for (const auto& w : omega) unit = unit && std::abs(std::abs(w) - 1.0) <= 1e-9;
    report.is_canonical = unit && report.corner_phase_error <= opts.phase_tolerance &&
                          !needs_conjugation(omega, opts.imag_tolerance);
    return report;
}

/// Translate x so the midpoint of its support box (rounded down) sits at
/// (floor((N1-1)/2), floor((N2-1)/2)). Centroid mode centers the
/// magnitude-weighted centroid instead.
inline ComplexImage center_support(const ComplexImage& x, double epsilon = kSupportEpsilon,
                                   Centering mode = Centering::BoundingBox) {
    const auto box = support_box(x, epsilon);
    if (!box) throw EmptySupportError("cannot center an image with empty support");
    const auto target_r = static_cast<std::int64_t>((x.rows() - 1) / 2);
    const auto target_c = static_cast<std::int64_t>((x.cols() - 1) / 2);
    std::int64_t mid_r, mid_c;
    if (mode == Centering::BoundingBox) {
        mid_r = static_cast<std::int64_t>((box->row_min + box->row_max) / 2);
        mid_c = static_cast<std::int64_t>((box->col_min + box->col_max) / 2);
    } else {
        double w = 0.0, sr = 0.0, sc = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) {
                const double m = std::abs(x(r, c));
                w += m;
                sr += m * static_cast<double>(r);
                sc += m * static_cast<double>(c);
            }
        }
        mid_r = static_cast<std::int64_t>(std::floor(sr / w));
        mid_c = static_cast<std::int64_t>(std::floor(sc / w));
    }
    return translate(x, target_r - mid_r, target_c - mid_c, epsilon);
}

/// exp(+i pi (k1 s1 / M1 + k2 s2 / M2)) with s = row_min + row_max (resp. cols):
/// moves the Fourier phase origin to the midpoint of the support box. In that
/// frame, conjugating the field corresponds to flipping the content inside its
/// own bounding box, so the flip never leaves the frame.
inline PhaseMatrix support_reference_ramp(const SupportBox& box, std::size_t m1, std::size_t m2) {
    const auto s1 = static_cast<std::int64_t>(box.row_min + box.row_max);
    const auto s2 = static_cast<std::int64_t>(box.col_min + box.col_max);
    const auto M1 = static_cast<std::int64_t>(m1);
    const auto M2 = static_cast<std::int64_t>(m2);
    PhaseMatrix ramp(m1, m2);
    for (std::int64_t k1 = 0; k1 < M1; ++k1) {
        const std::int64_t a = reduced_product(k1, s1, 2 * M1);
        for (std::int64_t k2 = 0; k2 < M2; ++k2) {
            const std::int64_t b = reduced_product(k2, s2, 2 * M2);
            const auto idx = static_cast<std::size_t>(k1 * M2 + k2);
            if (a == 0 && b == 0) {
                ramp[idx] = Complex{1.0, 0.0};
            } else {
                ramp[idx] = std::polar(1.0, std::numbers::pi * (static_cast<double>(a) / static_cast<double>(M1) +
                                                                static_cast<double>(b) / static_cast<double>(M2)));
            }
        }
    }
    return ramp;
}

/// Oversampled DFT of x with its phase origin at the support-box midpoint.
inline FourierField support_referenced_dft(const ComplexImage& x, std::size_t m1, std::size_t m2,
                                           double epsilon = kSupportEpsilon) {
    FourierField f = oversampled_dft(x, m1, m2);
    const auto box = support_box(x, epsilon);
    if (!box) return f;
    const PhaseMatrix ramp = support_reference_ramp(*box, m1, m2);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= ramp[i];
    return f;
}

/// Phase matrix tested for canonical membership.
inline PhaseMatrix canonical_phase(const ComplexImage& x, const CanonicalizeOptions& opts = {}) {
    const std::size_t m1 = oversampled_extent(x.rows(), opts.oversample);
    const std::size_t m2 = oversampled_extent(x.cols(), opts.oversample);
    return phase_of(support_referenced_dft(x, m1, m2, opts.support_epsilon), opts.magnitude_floor);
}

/// Intermediate state of one symmetry-breaking pass, exposed for inspection.
struct BreakTrace {
    ComplexImage result;
    ComplexImage centered;
    PhaseMatrix before_branch;  // after phase transfer
    PhaseMatrix after_branch;
    bool conjugated = false;
    bool degenerate = false;
};

inline BreakTrace break_symmetry_traced(const ComplexImage& x, const CanonicalizeOptions& opts = {}) {
    const double peak = max_abs(x);
    if (!(peak > 0.0)) throw EmptySupportError("symmetry breaking needs a nonzero image");

    BreakTrace trace;
    trace.centered = opts.center ? center_support(x, opts.support_epsilon, opts.centering) : x;
    const auto box = support_box(trace.centered, opts.support_epsilon);
    if (!box) throw EmptySupportError("symmetry breaking needs a nonzero image");

    const std::size_t n1 = x.rows(), n2 = x.cols();
    const std::size_t m1 = oversampled_extent(n1, opts.oversample);
    const std::size_t m2 = oversampled_extent(n2, opts.oversample);
    FourierField field = oversampled_dft(trace.centered, m1, m2);

    const double dc = std::abs(field[0]);
    if (!(dc > opts.dc_tolerance * static_cast<double>(n1 * n2) * peak)) {
        throw VanishingDcError("DC Fourier coefficient vanishes; phase transfer is undefined");
    }

    const PhaseMatrix ramp = support_reference_ramp(*box, m1, m2);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= ramp[i];

    // Global phase transfer: Omega(0,0) -> 1. The ramp is 1 at k = 0.
    const Complex corner = std::conj(field[0] / dc);
    for (auto& v : field) v *= corner;

    trace.before_branch = phase_of(field, opts.magnitude_floor);
    trace.degenerate = field.size() >= 2 && std::abs(trace.before_branch[1].imag()) <= opts.imag_tolerance;
    trace.conjugated = needs_conjugation(trace.before_branch, opts.imag_tolerance);
    if (trace.conjugated) {
        for (auto& v : field) v = std::conj(v);
        trace.after_branch = trace.before_branch;
        for (auto& w : trace.after_branch) w = std::conj(w);
    } else {
        trace.after_branch = trace.before_branch;
    }

    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= std::conj(ramp[i]);
    trace.result = inverse_oversampled_dft(field, n1, n2);
    return trace;
}

/// Map x to the canonical representative of its symmetry class: center the
/// support, rotate the global phase so the DC phase is 1, then conjugate the
/// Fourier field if its second phase lies in the lower half circle.
inline ComplexImage break_symmetry(const ComplexImage& x, const CanonicalizeOptions& opts = {}) {
    return break_symmetry_traced(x, opts).result;
}

struct CanonicalRecord {
    Measurement measurement;
    ComplexImage object;
};

struct RecordFailure {
    std::size_t index;
    std::string message;
};

struct CanonicalBatch {
    /// One slot per input record; empty where that record failed.
    std::vector<std::optional<CanonicalRecord>> records;
    std::vector<RecordFailure> failures;
};

inline CanonicalBatch canonicalize_dataset(const std::vector<ComplexImage>& inputs,
                                           const CanonicalizeOptions& opts = {}, unsigned threads = 1) {
    CanonicalBatch batch;
    batch.records.resize(inputs.size());
    std::vector<std::string> errors(inputs.size());
    parallel_for(inputs.size(), threads, [&](std::size_t i) {
        try {
            ComplexImage broken = break_symmetry(inputs[i], opts);
            Measurement y = forward_measure(broken, opts.oversample);
            batch.records[i] = CanonicalRecord{std::move(y), std::move(broken)};
        } catch (const Error& e) {
            errors[i] = e.what();
            if (errors[i].empty()) errors[i] = "unknown failure";
        }
    });
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!batch.records[i]) batch.failures.push_back({i, "record " + std::to_string(i) + ": " + errors[i]});
    }
    return batch;
}

}  // namespace ffpr
