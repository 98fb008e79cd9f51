#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace ffpr {

// Container layout, all integers and floats little-endian:
//   0  magic        6 bytes "FFPR1\0"
//   6  version      u16
//   8  record_count u32
//  12  n1, n2, m1, m2  u32 each
//  28  flags        u32   bit 0: symmetry-broken, bit 1: measurements present
//  32  records: n1*n2 complex as (re, im) f64 pairs, then m1*m2 f64 if bit 1
inline constexpr std::array<char, 6> kContainerMagic{'F', 'F', 'P', 'R', '1', '\0'};
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 32;
inline constexpr std::uint32_t kFlagSymmetryBroken = 1u << 0;
inline constexpr std::uint32_t kFlagMeasurements = 1u << 1;

struct ContainerHeader {
    std::uint16_t version = kContainerVersion;
    std::uint32_t record_count = 0;
    std::uint32_t n1 = 0, n2 = 0, m1 = 0, m2 = 0;
    std::uint32_t flags = 0;

    bool symmetry_broken() const { return (flags & kFlagSymmetryBroken) != 0; }
    bool has_measurements() const { return (flags & kFlagMeasurements) != 0; }

    std::uint64_t record_bytes() const {
        std::uint64_t b = 16ull * n1 * n2;
        if (has_measurements()) b += 8ull * m1 * m2;
        return b;
    }

    friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

struct ContainerRecord {
    ComplexImage object;
    std::optional<Measurement> measurement;
};

namespace detail {

inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xff));
}

inline std::uint64_t get_le(const unsigned char* p, int bytes) {
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_le(p, 8)); }

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > UINT32_MAX) throw ContainerError(ContainerError::Kind::Inhomogeneous, std::string(what) + " exceeds 32 bits");
    return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline std::vector<unsigned char> encode_header(const ContainerHeader& h) {
    std::vector<unsigned char> out(kContainerMagic.begin(), kContainerMagic.end());
    detail::put_u16(out, h.version);
    detail::put_u32(out, h.record_count);
    detail::put_u32(out, h.n1);
    detail::put_u32(out, h.n2);
    detail::put_u32(out, h.m1);
    detail::put_u32(out, h.m2);
    detail::put_u32(out, h.flags);
    return out;
}

/// Write records in order. Measurements are stored iff `flags` has bit 1, in
/// which case every record must carry one. `dims` fixes n1, n2, m1, m2 for an
/// empty dataset; otherwise they come from the first record.
inline void write_container(const std::filesystem::path& path, const std::vector<ContainerRecord>& records,
                            std::uint32_t flags,
                            std::array<std::size_t, 4> dims = {0, 0, 0, 0}) {
    using Kind = ContainerError::Kind;
    ContainerHeader h;
    h.flags = flags;
    h.record_count = detail::checked_u32(records.size(), "record count");
    const bool with_y = h.has_measurements();
    if (!records.empty()) {
        dims[0] = records[0].object.rows();
        dims[1] = records[0].object.cols();
        if (with_y) {
            if (!records[0].measurement) throw ContainerError(Kind::Inhomogeneous, "record 0 has no measurement", 0);
            dims[2] = records[0].measurement->rows();
            dims[3] = records[0].measurement->cols();
        } else {
            dims[2] = dims[3] = 0;
        }
    }
    h.n1 = detail::checked_u32(dims[0], "n1");
    h.n2 = detail::checked_u32(dims[1], "n2");
    h.m1 = detail::checked_u32(dims[2], "m1");
    h.m2 = detail::checked_u32(dims[3], "m2");

    std::vector<unsigned char> bytes = encode_header(h);
    bytes.reserve(bytes.size() + records.size() * h.record_bytes());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.object.rows() != h.n1 || rec.object.cols() != h.n2) {
            throw ContainerError(Kind::Inhomogeneous, "record " + std::to_string(i) + " object shape differs", static_cast<std::ptrdiff_t>(i));
        }
        for (const auto& v : rec.object) {
            detail::put_f64(bytes, v.real());
            detail::put_f64(bytes, v.imag());
        }
        if (with_y) {
            if (!rec.measurement || rec.measurement->rows() != h.m1 || rec.measurement->cols() != h.m2) {
                throw ContainerError(Kind::Inhomogeneous, "record " + std::to_string(i) + " measurement missing or misshapen",
                                     static_cast<std::ptrdiff_t>(i));
            }
            for (double v : *rec.measurement) detail::put_f64(bytes, v);
        }
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ContainerError(Kind::Io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ContainerError(Kind::Io, "failed writing " + path.string());
}

struct Container {
    ContainerHeader header;
    std::vector<ContainerRecord> records;
};

/// Read and fully validate a container. Nothing is returned unless every
/// record is present and the file has no trailing bytes.
inline Container read_container(const std::filesystem::path& path) {
    using Kind = ContainerError::Kind;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContainerError(Kind::Io, "cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const std::size_t magic_len = std::min(bytes.size(), kContainerMagic.size());
    if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_len), kContainerMagic.begin()) ||
        bytes.empty()) {
        throw ContainerError(Kind::BadMagic, path.string() + " is not an FFPR container");
    }
    if (bytes.size() < kContainerHeaderBytes) {
        throw ContainerError(Kind::Truncated, path.string() + ": header truncated at " + std::to_string(bytes.size()) + " bytes");
    }
    const unsigned char* p = bytes.data();
    Container c;
    c.header.version = static_cast<std::uint16_t>(detail::get_le(p + 6, 2));
    if (c.header.version != kContainerVersion) {
        throw ContainerError(Kind::BadVersion, path.string() + ": unsupported version " + std::to_string(c.header.version));
    }
    c.header.record_count = static_cast<std::uint32_t>(detail::get_le(p + 8, 4));
    c.header.n1 = static_cast<std::uint32_t>(detail::get_le(p + 12, 4));
    c.header.n2 = static_cast<std::uint32_t>(detail::get_le(p + 16, 4));
    c.header.m1 = static_cast<std::uint32_t>(detail::get_le(p + 20, 4));
    c.header.m2 = static_cast<std::uint32_t>(detail::get_le(p + 24, 4));
    c.header.flags = static_cast<std::uint32_t>(detail::get_le(p + 28, 4));

    const std::uint64_t rec_bytes = c.header.record_bytes();
    const std::uint64_t payload = bytes.size() - kContainerHeaderBytes;
    const std::uint64_t expected = rec_bytes * c.header.record_count;
    if (payload < expected) {
        const std::uint64_t whole = rec_bytes == 0 ? 0 : payload / rec_bytes;
        throw ContainerError(Kind::Truncated,
                             path.string() + ": truncated inside record " + std::to_string(whole) + " of " +
                                 std::to_string(c.header.record_count),
                             static_cast<std::ptrdiff_t>(whole));
    }
    if (payload > expected) {
        throw ContainerError(Kind::Inhomogeneous, path.string() + ": " + std::to_string(payload - expected) +
                                                      " trailing bytes after the last record");
    }

    const bool with_y = c.header.has_measurements();
    c.records.reserve(c.header.record_count);
    p += kContainerHeaderBytes;
    for (std::uint32_t i = 0; i < c.header.record_count; ++i) {
        ContainerRecord rec{ComplexImage(c.header.n1, c.header.n2), std::nullopt};
        for (auto& v : rec.object) {
            v = Complex{detail::get_f64(p), detail::get_f64(p + 8)};
            p += 16;
        }
        if (with_y) {
            Measurement y(c.header.m1, c.header.m2);
            for (auto& v : y) {
                v = detail::get_f64(p);
                p += 8;
            }
            rec.measurement = std::move(y);
        }
        c.records.push_back(std::move(rec));
    }
    return c;
}

enum class Channel { Magnitude, Phase, Intensity };
enum class ValueTransform { Identity, FourthRoot };

namespace detail {

inline std::vector<std::uint16_t> scale_to_levels(std::vector<double> v, ValueTransform t) {
    if (t == ValueTransform::FourthRoot) {
        for (auto& x : v) x = std::pow(std::max(0.0, x), 0.25);
    }
    const double peak = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    std::vector<std::uint16_t> out(v.size(), 0);
    if (!(peak > 0.0)) return out;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<std::uint16_t>(std::lround(65535.0 * v[i] / peak));
    return out;
}

}  // namespace detail

/// 16-bit gray levels. Magnitude and intensity are scaled by their maximum
/// (after the optional fourth root); phase maps (-pi, pi] linearly onto [0, 65535].
inline std::vector<std::uint16_t> image_levels(const ComplexImage& x, Channel channel, ValueTransform t) {
    std::vector<double> v(x.size());
    if (channel == Channel::Phase) {
        std::vector<std::uint16_t> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            double a = std::arg(x[i]);
            if (a <= -std::numbers::pi) a = std::numbers::pi;
            out[i] = static_cast<std::uint16_t>(std::lround(65535.0 * (a + std::numbers::pi) / (2.0 * std::numbers::pi)));
        }
        return out;
    }
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = channel == Channel::Magnitude ? std::abs(x[i]) : std::norm(x[i]);
    return detail::scale_to_levels(std::move(v), t);
}

inline std::vector<std::uint16_t> image_levels(const Measurement& y, Channel channel, ValueTransform t) {
    if (channel == Channel::Phase) throw InvalidArgument("a measurement has no phase channel");
    std::vector<double> v(y.begin(), y.end());
    if (channel == Channel::Magnitude) {
        for (auto& x : v) x = std::sqrt(std::max(0.0, x));
    }
    return detail::scale_to_levels(std::move(v), t);
}

/// Binary 16-bit PGM (P5, maxval 65535, samples most significant byte first).
inline void write_pgm(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                      const std::vector<std::uint16_t>& levels) {
    if (levels.size() != rows * cols) throw DimensionError("PGM level count does not match its shape");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ContainerError(ContainerError::Kind::Io, "cannot open " + path.string() + " for writing");
    out << "P5\n" << cols << ' ' << rows << "\n65535\n";
    for (std::uint16_t v : levels) {
        const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
        out.write(bytes, 2);
    }
    if (!out) throw ContainerError(ContainerError::Kind::Io, "failed writing " + path.string());
}

template <class Image>
void export_image(const Image& img, const std::filesystem::path& path, Channel channel,
                  ValueTransform t = ValueTransform::Identity) {
    write_pgm(path, img.rows(), img.cols(), image_levels(img, channel, t));
}

/// Decimal with 17 significant digits, enough to round-trip any double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Dump objects (and measurements, when present) as NumPy .npy arrays of shape
/// (count, rows, cols): complex128 for objects, float64 for measurements.
inline void write_npy(const std::filesystem::path& path, const std::vector<ContainerRecord>& records, bool measurements) {
    std::size_t rows = 0, cols = 0;
    if (!records.empty()) {
        if (measurements) {
            if (!records[0].measurement) throw InvalidArgument("records carry no measurements");
            rows = records[0].measurement->rows();
            cols = records[0].measurement->cols();
        } else {
            rows = records[0].object.rows();
            cols = records[0].object.cols();
        }
    }
    std::string header = "{'descr': '" + std::string(measurements ? "<f8" : "<c16") +
                         "', 'fortran_order': False, 'shape': (" + std::to_string(records.size()) + ", " +
                         std::to_string(rows) + ", " + std::to_string(cols) + "), }";
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');

    std::vector<unsigned char> bytes{0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
    detail::put_u16(bytes, static_cast<std::uint16_t>(header.size()));
    bytes.insert(bytes.end(), header.begin(), header.end());
    for (const auto& rec : records) {
        if (measurements) {
            if (!rec.measurement) throw InvalidArgument("record without measurement");
            for (double v : *rec.measurement) detail::put_f64(bytes, v);
        } else {
            for (const auto& v : rec.object) {
                detail::put_f64(bytes, v.real());
                detail::put_f64(bytes, v.imag());
            }
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ContainerError(ContainerError::Kind::Io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace ffpr
