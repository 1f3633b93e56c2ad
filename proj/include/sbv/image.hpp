#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "sbv/error.hpp"

namespace sbv {

/// Row-major 8-bit intensity grid. The universal pixel container.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h) {
        if (w < 1 || h < 1) throw DimensionError("GrayImage dimensions must be >= 1");
        pixels.assign(static_cast<std::size_t>(w) * h, fill);
    }

    std::uint8_t& at(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }
    std::uint8_t at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }

    /// Sample with edge replication; any integer coordinate is legal.
    std::uint8_t at_clamped(int u, int v) const {
        u = std::clamp(u, 0, width - 1);
        v = std::clamp(v, 0, height - 1);
        return at(u, v);
    }

    bool same_size(const GrayImage& o) const { return width == o.width && height == o.height; }
};

/// Non-finite marker for pixels that carry no measurement.
inline float invalid_value() { return std::numeric_limits<float>::quiet_NaN(); }

inline bool is_invalid(float v) { return !std::isfinite(v); }
inline bool is_valid(float v) { return std::isfinite(v); }

/// Row-major float raster; entries are finite measurements or the invalid sentinel.
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    FloatImage() = default;
    FloatImage(int w, int h, float fill = 0.0f) : width(w), height(h) {
        if (w < 1 || h < 1) throw DimensionError("FloatImage dimensions must be >= 1");
        values.assign(static_cast<std::size_t>(w) * h, fill);
    }

    float& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
    float at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }

    bool same_size(const FloatImage& o) const { return width == o.width && height == o.height; }

    std::size_t count_valid() const {
        std::size_t n = 0;
        for (float v : values) n += is_valid(v) ? 1 : 0;
        return n;
    }
};

/// Per-pixel disparity in pixels, subpixel-resolved, invalid where matching failed.
using DisparityMap = FloatImage;

/// Per-pixel depth in meters along the optical axis, invalid where unknown.
using DepthMap = FloatImage;

}  // namespace sbv
