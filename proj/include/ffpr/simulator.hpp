#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace ffpr {

struct Point {
    double row;
    double col;
};

/// Crystal dislocation core. The phase winds by winding * q_scale * 2 pi around it.
struct Defect {
    Point position;
    int winding;  // +1 or -1
};

struct CrystalSpec {
    std::size_t frame_size = 32;
    std::vector<Point> vertices;  // polygon before rounding, frame coordinates
    std::size_t smoothing_rounds = 3;
    std::vector<Defect> defects;
    double q_scale = 1.0;
};

struct SimulatorOptions {
    std::size_t frame_size = 32;
    std::size_t min_vertices = 3;
    std::size_t max_vertices = 10;
    /// Vertex radii as fractions of the half-frame N / 2.
    double min_radius = 0.2;
    double max_radius = 0.45;
    /// Each polygon draws a base radius and an irregularity u ~ U[0, 1]; vertex
    /// radii then spread up to u * radius_spread around the base (clipped to
    /// the radius range). Larger spreads give more nonconvex shapes.
    double radius_spread = 0.125;
    std::size_t smoothing_rounds = 3;
    std::size_t min_defects = 0;
    std::size_t max_defects = 4;
    double min_q_scale = 0.5;
    double max_q_scale = 2.0;
    /// Polygons that rasterize to fewer pixels are redrawn.
    std::size_t min_pixels = 8;
};

/// Chaikin corner cutting on a closed polygon.
inline std::vector<Point> round_corners(std::vector<Point> poly, std::size_t rounds) {
    for (std::size_t k = 0; k < rounds; ++k) {
        std::vector<Point> next;
        next.reserve(poly.size() * 2);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Point& p = poly[i];
            const Point& q = poly[(i + 1) % poly.size()];
            next.push_back({0.75 * p.row + 0.25 * q.row, 0.75 * p.col + 0.25 * q.col});
            next.push_back({0.25 * p.row + 0.75 * q.row, 0.25 * p.col + 0.75 * q.col});
        }
        poly = std::move(next);
    }
    return poly;
}

/// Even-odd crossing test.
inline bool point_in_polygon(const std::vector<Point>& poly, Point p) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Point& a = poly[i];
        const Point& b = poly[j];
        if ((a.row > p.row) != (b.row > p.row)) {
            const double col_at = a.col + (p.row - a.row) * (b.col - a.col) / (b.row - a.row);
            if (p.col < col_at) inside = !inside;
        }
    }
    return inside;
}

inline bool is_convex(const std::vector<Point>& poly) {
    int sign = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % n];
        const Point& c = poly[(i + 2) % n];
        const double cross = (b.col - a.col) * (c.row - b.row) - (b.row - a.row) * (c.col - b.col);
        if (std::abs(cross) < 1e-12) continue;
        const int s = cross > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

/// Rasterized support: pixel (r, c) is inside when its center is.
inline std::vector<std::uint8_t> rasterize(const std::vector<Point>& outline, std::size_t n) {
    std::vector<std::uint8_t> mask(n * n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            mask[r * n + c] = point_in_polygon(outline, {static_cast<double>(r), static_cast<double>(c)}) ? 1 : 0;
        }
    }
    return mask;
}

/// Unit magnitude inside the rounded polygon, zero outside; interior phase is
/// wrap(q_scale * sum_d winding_d * atan2(row - row_d, col - col_d)).
inline ComplexImage render_crystal(const CrystalSpec& spec) {
    const std::size_t n = spec.frame_size;
    const auto outline = round_corners(spec.vertices, spec.smoothing_rounds);
    const auto mask = rasterize(outline, n);
    ComplexImage x(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            if (!mask[r * n + c]) continue;
            double phase = 0.0;
            for (const auto& d : spec.defects) {
                phase += d.winding * std::atan2(static_cast<double>(r) - d.position.row,
                                                static_cast<double>(c) - d.position.col);
            }
            x(r, c) = std::polar(1.0, wrap_phase(spec.q_scale * phase));
        }
    }
    return x;
}

/// Draw a random rounded polygon inside the central N/2 x N/2 window, plus defects.
inline CrystalSpec draw_crystal(RandomStream& rng, const SimulatorOptions& opts = {}) {
    const std::size_t n = opts.frame_size;
    if (n < 8) throw InvalidArgument("crystal frame must be at least 8 pixels");
    const double lo = static_cast<double>(n / 4);
    const double hi = static_cast<double>(n - 1 - n / 4);
    const double half = static_cast<double>(n) / 2.0;

    for (;;) {
        CrystalSpec spec;
        spec.frame_size = n;
        spec.smoothing_rounds = opts.smoothing_rounds;

        const auto count = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(opts.min_vertices),
                                                                static_cast<std::int64_t>(opts.max_vertices)));
        std::vector<double> angles(count);
        for (auto& a : angles) a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        std::sort(angles.begin(), angles.end());
        const double base = rng.uniform(opts.min_radius, opts.max_radius);
        const double spread = rng.uniform() * opts.radius_spread;
        const double r_lo = std::max(opts.min_radius, base - spread);
        const double r_hi = std::min(opts.max_radius, base + spread);
        for (double a : angles) {
            const double radius = rng.uniform(r_lo, r_hi) * half;
            spec.vertices.push_back({radius * std::sin(a), radius * std::cos(a)});
        }

        double rmin = 1e300, rmax = -1e300, cmin = 1e300, cmax = -1e300;
        for (const auto& p : spec.vertices) {
            rmin = std::min(rmin, p.row), rmax = std::max(rmax, p.row);
            cmin = std::min(cmin, p.col), cmax = std::max(cmax, p.col);
        }
        // Keep the polygon strictly inside the central window.
        const double row_lo = lo + 0.5 - rmin, row_hi = hi - 0.5 - rmax;
        const double col_lo = lo + 0.5 - cmin, col_hi = hi - 0.5 - cmax;
        if (row_lo > row_hi || col_lo > col_hi) continue;
        const Point center{rng.uniform(row_lo, row_hi), rng.uniform(col_lo, col_hi)};
        for (auto& p : spec.vertices) p = {p.row + center.row, p.col + center.col};

        const auto outline = round_corners(spec.vertices, spec.smoothing_rounds);
        const auto mask = rasterize(outline, n);
        std::vector<std::size_t> interior;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask[i]) interior.push_back(i);
        }
        if (interior.size() < opts.min_pixels) continue;

        const auto defects = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(opts.min_defects),
                                                                  static_cast<std::int64_t>(opts.max_defects)));
        while (spec.defects.size() < defects) {
            const std::size_t pick = interior[static_cast<std::size_t>(
                rng.integer(0, static_cast<std::int64_t>(interior.size()) - 1))];
            const Point p{static_cast<double>(pick / n) + rng.uniform(-0.5, 0.5),
                          static_cast<double>(pick % n) + rng.uniform(-0.5, 0.5)};
            if (!point_in_polygon(outline, p)) continue;
            spec.defects.push_back({p, rng.coin() ? 1 : -1});
        }
        spec.q_scale = rng.uniform(opts.min_q_scale, opts.max_q_scale);
        return spec;
    }
}

inline ComplexImage sample_crystal(RandomStream& rng, const SimulatorOptions& opts = {}) {
    return render_crystal(draw_crystal(rng, opts));
}

struct DatasetSpec {
    std::size_t count = 500;
    std::size_t frame_size = 32;
    double oversample = 2.0;
    std::uint64_t seed = 0;
    std::size_t min_defects = 0;
    std::size_t max_defects = 4;
};

struct DatasetRecord {
    ComplexImage object;
    Measurement measurement;
};

/// Record i is drawn from the substream (seed, i), so output is independent of
/// thread count.
inline std::vector<DatasetRecord> generate_dataset(const DatasetSpec& spec, unsigned threads = 1) {
    if (spec.count == 0) throw InvalidArgument("dataset count must be positive");
    if (spec.min_defects > spec.max_defects) throw InvalidArgument("defect range is empty");
    SimulatorOptions opts;
    opts.frame_size = spec.frame_size;
    opts.min_defects = spec.min_defects;
    opts.max_defects = spec.max_defects;

    std::vector<DatasetRecord> records(spec.count);
    parallel_for(spec.count, threads, [&](std::size_t i) {
        RandomStream rng = RandomStream::substream(spec.seed, i);
        ComplexImage x = sample_crystal(rng, opts);
        Measurement y = forward_measure(x, spec.oversample);
        records[i] = DatasetRecord{std::move(x), std::move(y)};
    });
    return records;
}

}  // namespace ffpr
