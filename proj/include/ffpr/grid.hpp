#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace ffpr {

using Complex = std::complex<double>;

/// Dense row-major 2-D array. The tag parameter keeps object-domain images,
/// Fourier fields, intensities and phase matrices from being mixed up.
template <class T, class Tag>
class Grid {
public:
    using value_type = T;

    Grid() = default;

    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Grid(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("grid data length " + std::to_string(data_.size()) +
                                 " does not match " + std::to_string(rows_) + "x" +
                                 std::to_string(cols_));
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    bool same_shape(const auto& other) const noexcept {
        return rows_ == other.rows() && cols_ == other.cols();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

struct ObjectTag {};
struct FourierTag {};
struct IntensityTag {};
struct PhaseTag {};
struct MaskTag {};

/// Object-domain sample X (N1 x N2), or a padded object-domain iterate.
using ComplexImage = Grid<Complex, ObjectTag>;
/// Oversampled DFT coefficients (M1 x M2).
using FourierField = Grid<Complex, FourierTag>;
/// Fourier intensities Y = |F(X)|^2 (M1 x M2).
using Measurement = Grid<double, IntensityTag>;
/// Unit-modulus phase matrix e^{i Theta}.
using PhaseMatrix = Grid<Complex, PhaseTag>;
/// Boolean support mask, stored as 0/1 bytes.
using Mask = Grid<std::uint8_t, MaskTag>;

template <class T, class Tag>
bool all_finite(const Grid<T, Tag>& g) {
    return std::all_of(g.begin(), g.end(), [](const T& v) {
        if constexpr (std::is_same_v<T, Complex>) {
            return std::isfinite(v.real()) && std::isfinite(v.imag());
        } else {
            return std::isfinite(static_cast<double>(v));
        }
    });
}

template <class Tag>
double max_abs(const Grid<Complex, Tag>& g) {
    double m = 0.0;
    for (const auto& v : g) m = std::max(m, std::abs(v));
    return m;
}

template <class Tag>
double squared_norm(const Grid<Complex, Tag>& g) {
    double s = 0.0;
    for (const auto& v : g) s += std::norm(v);
    return s;
}

/// Sum of conj(a) * b over all entries.
template <class Tag>
Complex inner_product(const Grid<Complex, Tag>& a, const Grid<Complex, Tag>& b) {
    if (!a.same_shape(b)) throw DimensionError("inner product of differently shaped grids");
    Complex s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

/// Largest elementwise |a - b|.
template <class T, class Tag>
double max_abs_diff(const Grid<T, Tag>& a, const Grid<T, Tag>& b) {
    if (!a.same_shape(b)) throw DimensionError("comparing differently shaped grids");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace ffpr
