#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <tuple>

#include "errors.hpp"

namespace ffpr::fft {

enum class Direction { Forward, Backward };

namespace detail {

// FFTW's planner is not thread-safe, but executing an existing plan on new
// arrays is. Plans are created once per (rows, cols, direction) under a lock
// and reused by every caller. FFTW_ESTIMATE keeps plan selection, and hence
// the bits of every result, independent of timing.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t rows, std::size_t cols, Direction dir) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(rows, cols, dir);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto* scratch = fftw_alloc_complex(rows * cols);
        fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), scratch,
                                          scratch, dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(scratch);
        if (plan == nullptr) throw Error("FFTW failed to create a plan");
        plans_.emplace(key, plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::mutex mutex_;
    std::map<std::tuple<std::size_t, std::size_t, Direction>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized in-place 2-D DFT of a row-major rows x cols buffer.
/// Forward uses the e^{-2 pi i k n / M} kernel; no scaling in either direction.
inline void transform(std::span<std::complex<double>> data, std::size_t rows, std::size_t cols,
                      Direction dir) {
    if (data.size() != rows * cols || rows == 0 || cols == 0) {
        throw DimensionError("fft buffer does not match its declared shape");
    }
    fftw_plan plan = detail::PlanCache::instance().get(rows, cols, dir);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
}

}  // namespace ffpr::fft
