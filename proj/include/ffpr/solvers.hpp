#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "canonicalize.hpp"
#include "core.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace ffpr {

enum class Projection { ER, HIO };

struct ScheduleStage {
    Projection kind;
    std::size_t iterations;
};

/// Six cycles of (HIO 90, ER 10) followed by 20 closing ER iterations.
inline std::vector<ScheduleStage> default_schedule() {
    std::vector<ScheduleStage> s;
    for (int i = 0; i < 6; ++i) {
        s.push_back({Projection::HIO, 90});
        s.push_back({Projection::ER, 10});
    }
    s.push_back({Projection::ER, 20});
    return s;
}

struct SolverConfig {
    double beta = 0.9;
    std::vector<ScheduleStage> schedule = default_schedule();
    bool shrinkwrap = true;
    std::size_t shrinkwrap_every = 10;
    double shrinkwrap_sigma0 = 3.0;
    double shrinkwrap_sigma_decay = 0.95;
    double shrinkwrap_threshold = 0.2;
    std::size_t restarts = 5;
    std::uint64_t seed = 0;
    /// Workers used for independent restarts.
    unsigned threads = 1;

    std::size_t total_iterations() const {
        std::size_t n = 0;
        for (const auto& s : schedule) n += s.iterations;
        return n;
    }

    void validate() const {
        if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in (0, 1]");
        if (schedule.empty()) throw InvalidArgument("solver schedule is empty");
        for (const auto& s : schedule) {
            if (s.iterations == 0) throw InvalidArgument("schedule stages need at least one iteration");
        }
        if (shrinkwrap_every == 0) throw InvalidArgument("shrinkwrap interval must be positive");
        if (!(shrinkwrap_sigma0 > 0.0)) throw InvalidArgument("shrinkwrap sigma must be positive");
        if (!(shrinkwrap_sigma_decay > 0.0 && shrinkwrap_sigma_decay <= 1.0)) {
            throw InvalidArgument("shrinkwrap sigma decay must lie in (0, 1]");
        }
        if (!(shrinkwrap_threshold > 0.0 && shrinkwrap_threshold < 1.0)) {
            throw InvalidArgument("shrinkwrap threshold must lie in (0, 1)");
        }
        if (restarts == 0) throw InvalidArgument("at least one restart is required");
    }
};

struct SolveResult {
    ComplexImage reconstruction;
    /// ||  |F(z_k)| - sqrt(y) ||_F after every iteration of the winning run.
    std::vector<double> residual_history;
    std::size_t best_restart = 0;
    Mask support_final;
    /// Final residual of each restart, in restart order.
    std::vector<double> restart_residuals;
    /// Some shrinkwrap update thresholded to nothing and kept the old mask.
    bool support_flagged = false;
};

namespace detail {

inline std::vector<double> amplitudes(const Measurement& y) {
    std::vector<double> a(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) a[i] = std::sqrt(std::max(0.0, y[i]));
    return a;
}

/// Replace Fourier magnitudes of `spectrum` (modified in place) by `amp`,
/// keeping phases, and return the inverse transform. Zero bins take phase 1.
inline ComplexImage magnitude_projection_from_spectrum(FourierField& spectrum, const std::vector<double>& amp) {
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        const double m = std::abs(spectrum[i]);
        spectrum[i] = m > 0.0 ? spectrum[i] * (amp[i] / m) : Complex{amp[i], 0.0};
    }
    fft::transform(spectrum.values(), spectrum.rows(), spectrum.cols(), fft::Direction::Backward);
    const double scale = 1.0 / static_cast<double>(spectrum.size());
    ComplexImage out(spectrum.rows(), spectrum.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = spectrum[i] * scale;
    return out;
}

inline FourierField spectrum_of(const ComplexImage& z) {
    FourierField f(z.rows(), z.cols(), std::vector<Complex>(z.begin(), z.end()));
    fft::transform(f.values(), f.rows(), f.cols(), fft::Direction::Forward);
    return f;
}

inline double residual_of_spectrum(const FourierField& f, const std::vector<double>& amp) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = std::abs(f[i]) - amp[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline void require_matching(const ComplexImage& z, const Measurement& y) {
    if (!z.same_shape(y)) throw DimensionError("iterate and measurement differ in shape");
}

inline void require_matching(const ComplexImage& z, const Mask& support) {
    if (!z.same_shape(support)) throw DimensionError("iterate and support mask differ in shape");
}

/// Update from an iterate whose spectrum is already known.
inline ComplexImage projection_update(const ComplexImage& z, FourierField spectrum, const std::vector<double>& amp,
                                      const Mask& support, Projection kind, double beta) {
    ComplexImage p = magnitude_projection_from_spectrum(spectrum, amp);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (support[i]) continue;
        p[i] = kind == Projection::ER ? Complex{} : z[i] - beta * p[i];
    }
    return p;
}

}  // namespace detail

/// P_M: keep Fourier phases of z, impose magnitudes sqrt(y).
inline ComplexImage project_magnitude(const ComplexImage& z, const Measurement& y) {
    detail::require_matching(z, y);
    FourierField f = detail::spectrum_of(z);
    return detail::magnitude_projection_from_spectrum(f, detail::amplitudes(y));
}

/// || |F(z)| - sqrt(y) ||_F.
inline double magnitude_residual(const ComplexImage& z, const Measurement& y) {
    detail::require_matching(z, y);
    return detail::residual_of_spectrum(detail::spectrum_of(z), detail::amplitudes(y));
}

/// Error reduction: support projection of the magnitude projection.
inline ComplexImage er_step(const ComplexImage& z, const Measurement& y, const Mask& support) {
    detail::require_matching(z, y);
    detail::require_matching(z, support);
    return detail::projection_update(z, detail::spectrum_of(z), detail::amplitudes(y), support, Projection::ER, 0.0);
}

/// Hybrid input-output: P_M(z) inside the support, z - beta * P_M(z) outside.
inline ComplexImage hio_step(const ComplexImage& z, const Measurement& y, const Mask& support, double beta) {
    detail::require_matching(z, y);
    detail::require_matching(z, support);
    return detail::projection_update(z, detail::spectrum_of(z), detail::amplitudes(y), support, Projection::HIO, beta);
}

/// Separable Gaussian blur with zero boundary, kernel truncated at 4 sigma.
inline std::vector<double> gaussian_blur(const std::vector<double>& img, std::size_t rows, std::size_t cols,
                                         double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = v;
        total += v;
    }
    for (auto& v : kernel) v /= total;

    const auto R = static_cast<std::ptrdiff_t>(rows);
    const auto C = static_cast<std::ptrdiff_t>(cols);
    std::vector<double> tmp(img.size(), 0.0), out(img.size(), 0.0);
    for (std::ptrdiff_t r = 0; r < R; ++r) {
        for (std::ptrdiff_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                const std::ptrdiff_t cc = c + k;
                if (cc >= 0 && cc < C) s += kernel[static_cast<std::size_t>(k + radius)] * img[static_cast<std::size_t>(r * C + cc)];
            }
            tmp[static_cast<std::size_t>(r * C + c)] = s;
        }
    }
    for (std::ptrdiff_t r = 0; r < R; ++r) {
        for (std::ptrdiff_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                const std::ptrdiff_t rr = r + k;
                if (rr >= 0 && rr < R) s += kernel[static_cast<std::size_t>(k + radius)] * tmp[static_cast<std::size_t>(rr * C + c)];
            }
            out[static_cast<std::size_t>(r * C + c)] = s;
        }
    }
    return out;
}

struct ShrinkwrapResult {
    Mask mask;
    /// Thresholding produced nothing; `mask` is the previous mask.
    bool kept_previous = false;
};

/// Support estimate: pixels where the blurred magnitude reaches threshold * max.
inline ShrinkwrapResult shrinkwrap_update(const ComplexImage& current, double sigma, double threshold,
                                          const std::optional<Mask>& previous = std::nullopt) {
    if (!(sigma > 0.0)) throw InvalidArgument("shrinkwrap sigma must be positive");
    std::vector<double> mag(current.size());
    for (std::size_t i = 0; i < current.size(); ++i) mag[i] = std::abs(current[i]);
    const std::vector<double> blurred = gaussian_blur(mag, current.rows(), current.cols(), sigma);
    const double peak = blurred.empty() ? 0.0 : *std::max_element(blurred.begin(), blurred.end());
    if (!(peak > 0.0)) {
        return {previous ? *previous : Mask(current.rows(), current.cols(), 1), true};
    }
    Mask mask(current.rows(), current.cols(), 0);
    const double cut = threshold * peak;
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = blurred[i] >= cut ? 1 : 0;
    return {std::move(mask), false};
}

/// One scheduled run from a given padded starting iterate.
struct RunResult {
    ComplexImage iterate;
    std::vector<double> residual_history;
    Mask support;
    bool support_flagged = false;
};

namespace detail {

inline void validate_problem(const Measurement& y, std::size_t n1, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw DimensionError("object frame must be nonempty");
    if (y.rows() + 1 < 2 * n1 || y.cols() + 1 < 2 * n2) {
        throw DimensionError("measurement " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                             " is too small for a " + std::to_string(n1) + "x" + std::to_string(n2) +
                             " object (need M >= 2N - 1)");
    }
    bool nonzero = false;
    for (double v : y) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("measurement entries must be finite and nonnegative");
        nonzero = nonzero || v > 0.0;
    }
    if (!nonzero) throw InvalidArgument("measurement is identically zero");
}

inline Mask frame_window(std::size_t m1, std::size_t m2, std::size_t n1, std::size_t n2) {
    Mask w(m1, m2, 0);
    for (std::size_t r = 0; r < n1; ++r) {
        for (std::size_t c = 0; c < n2; ++c) w(r, c) = 1;
    }
    return w;
}

}  // namespace detail

/// Execute the configured schedule from `start` (an M1 x M2 padded iterate).
/// The support starts as the N1 x N2 object frame and every shrinkwrap update
/// is intersected with it.
inline RunResult run_schedule(const Measurement& y, std::size_t n1, std::size_t n2, const SolverConfig& config,
                              ComplexImage start) {
    config.validate();
    detail::validate_problem(y, n1, n2);
    detail::require_matching(start, y);

    const std::vector<double> amp = detail::amplitudes(y);
    const Mask window = detail::frame_window(y.rows(), y.cols(), n1, n2);

    RunResult run;
    run.support = window;
    run.iterate = std::move(start);
    run.residual_history.reserve(config.total_iterations());

    double sigma = config.shrinkwrap_sigma0;
    FourierField spectrum = detail::spectrum_of(run.iterate);
    std::size_t iteration = 0;
    for (const auto& stage : config.schedule) {
        for (std::size_t k = 0; k < stage.iterations; ++k, ++iteration) {
            if (config.shrinkwrap && iteration > 0 && iteration % config.shrinkwrap_every == 0) {
                ComplexImage inside = run.iterate;
                for (std::size_t i = 0; i < inside.size(); ++i) {
                    if (!run.support[i]) inside[i] = Complex{};
                }
                ShrinkwrapResult sw = shrinkwrap_update(inside, sigma, config.shrinkwrap_threshold, run.support);
                for (std::size_t i = 0; i < sw.mask.size(); ++i) sw.mask[i] = sw.mask[i] && window[i];
                if (sw.kept_previous || std::none_of(sw.mask.begin(), sw.mask.end(), [](auto v) { return v != 0; })) {
                    run.support_flagged = true;
                } else {
                    run.support = std::move(sw.mask);
                }
                sigma *= config.shrinkwrap_sigma_decay;
            }
            run.iterate = detail::projection_update(run.iterate, std::move(spectrum), amp, run.support, stage.kind,
                                                    config.beta);
            spectrum = detail::spectrum_of(run.iterate);
            run.residual_history.push_back(detail::residual_of_spectrum(spectrum, amp));
        }
    }
    return run;
}

/// Random-phase starting iterate: inverse DFT of sqrt(y) e^{i phi}, phi uniform in (-pi, pi].
inline ComplexImage random_phase_start(const Measurement& y, RandomStream& rng) {
    FourierField f(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.size(); ++i) f[i] = std::polar(std::sqrt(std::max(0.0, y[i])), rng.phase());
    return inverse_oversampled_dft(f, y.rows(), y.cols());
}

/// HIO/ER/shrinkwrap reconstruction with independent random restarts. The run
/// with the lowest final magnitude residual wins; its iterate is cropped to the
/// object frame and its support centered.
inline SolveResult solve(const Measurement& y, std::size_t n1, std::size_t n2, const SolverConfig& config) {
    config.validate();
    detail::validate_problem(y, n1, n2);

    std::vector<RunResult> runs(config.restarts);
    parallel_for(config.restarts, config.threads, [&](std::size_t r) {
        RandomStream rng = RandomStream::substream(config.seed, r);
        runs[r] = run_schedule(y, n1, n2, config, random_phase_start(y, rng));
    });

    SolveResult result;
    result.best_restart = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        result.restart_residuals.push_back(runs[r].residual_history.back());
        if (runs[r].residual_history.back() < runs[result.best_restart].residual_history.back()) {
            result.best_restart = r;
        }
    }
    RunResult& best = runs[result.best_restart];
    ComplexImage crop(n1, n2);
    for (std::size_t r = 0; r < n1; ++r) {
        for (std::size_t c = 0; c < n2; ++c) crop(r, c) = best.iterate(r, c);
    }
    result.reconstruction = max_abs(crop) > 0.0 ? center_support(crop) : crop;
    result.residual_history = std::move(best.residual_history);
    result.support_final = std::move(best.support);
    result.support_flagged = best.support_flagged;
    return result;
}

}  // namespace ffpr
