#pragma once

#include <cstdint>
#include <vector>

#include "sbv/image.hpp"

namespace sbv {

/// Per-pixel census descriptors for one image.
struct CensusGrid {
    int width = 0;
    int height = 0;
    int bits = 0;  ///< descriptor length = (2*radius+1)^2 - 1
    std::vector<std::uint32_t> descriptors;

    std::uint32_t at(int u, int v) const {
        return descriptors[static_cast<std::size_t>(v) * width + u];
    }
};

/// Census transform over a (2*radius+1)^2 window, center skipped. Neighbors are
/// visited in row-major order with the first neighbor landing in the highest
/// bit; a bit is set iff the neighbor intensity is less than the center.
/// Borders read edge-replicated neighbors. Default radius 2 gives the 24-bit
/// 5x5 descriptor used by the matcher.
CensusGrid census_transform(const GrayImage& img, int radius = 2, int threads = 1);

/// Matching-cost tensor C(v,u,d), row-major over (v, u, d).
struct CostVolume {
    int width = 0;
    int height = 0;
    int num_disparities = 0;
    std::vector<std::int32_t> cost;

    CostVolume() = default;
    CostVolume(int w, int h, int d)
        : width(w), height(h), num_disparities(d),
          cost(static_cast<std::size_t>(w) * h * d, 0) {}

    std::int32_t at(int v, int u, int d) const {
        return cost[(static_cast<std::size_t>(v) * width + u) * num_disparities + d];
    }
    std::int32_t& at(int v, int u, int d) {
        return cost[(static_cast<std::size_t>(v) * width + u) * num_disparities + d];
    }
};

/// Hamming cost volume referenced to the left image:
/// C(v,u,d) = popcount(left(v,u) XOR right(v,u-d)); u-d < 0 saturates to the
/// descriptor bit count.
CostVolume compute_cost_volume(const CensusGrid& left, const CensusGrid& right,
                               int num_disparities, int threads = 1);

/// Same cost referenced to the right image: C(v,u,d) compares right(v,u) with
/// left(v,u+d), saturating past the right image border. Used for the
/// left-right consistency re-match.
CostVolume compute_cost_volume_right_base(const CensusGrid& left, const CensusGrid& right,
                                          int num_disparities, int threads = 1);

/// Winner-take-all SAD block matching. Deliberately minimal: no aggregation,
/// no subpixel, ties break to the smallest disparity. Block must be odd >= 3.
DisparityMap block_match(const GrayImage& left, const GrayImage& right, int num_disparities,
                         int block, int threads = 1);

/// One directional pass of the semi-global recurrence:
///   L(p,d) = C(p,d) + min(L(q,d), L(q,d-1)+P1, L(q,d+1)+P1, min_k L(q,k)+P2)
///            - min_k L(q,k),       q = p - (dr,dc)
/// with L = C at the first pixel of each path and out-of-range d terms omitted.
/// Direction must be one of the eight compass steps. Arithmetic is exact for
/// any int32 penalties including saturating "infinite" ones.
CostVolume aggregate_path(const CostVolume& volume, int dr, int dc, std::int32_t p1,
                          std::int32_t p2);

/// Element-wise sum of the directional passes (4 or 8) over a cost volume,
/// computed with two fused sweeps. Equals the sum of the matching
/// aggregate_path results exactly; this is the volume the matcher's
/// winner-take-all stage consumes. Works in 32-bit arithmetic sized for
/// census-scale costs: entries and p2 must stay below 2^28.
std::vector<std::int32_t> aggregate_paths_sum(const CostVolume& volume, int num_paths,
                                              std::int32_t p1, std::int32_t p2);

/// Parabola minimum through equally spaced costs (c_minus, c0, c_plus):
/// offset = (c_minus - c_plus) / (2*(c_minus - 2*c0 + c_plus)), clamped to
/// [-0.5, 0.5]; flat curvature returns 0.
double subpixel_refine(double c_minus, double c0, double c_plus);

struct SgbmParams {
    int num_disparities = 64;   ///< D, multiple of 8
    std::int32_t p1 = 8;        ///< small disparity-change penalty
    std::int32_t p2 = 32;       ///< large disparity-change penalty
    int num_paths = 8;          ///< 4 or 8 aggregation directions
    int uniqueness_ratio = 10;  ///< percent margin the winner must hold
    double lr_max_diff = 1.0;   ///< left-right consistency tolerance, px
    int speckle_window = 100;   ///< regions smaller than this (px^2) are removed
    double speckle_range = 1.0; ///< neighboring disparities within this join a region

    void validate() const;
};

/// Semi-global matcher: census cost, path aggregation over num_paths
/// directions, winner-take-all with uniqueness test, subpixel parabola
/// refinement, left-right consistency via a full right-referenced re-match,
/// then speckle removal. Images must be equal-sized and at least 16x16.
DisparityMap sgbm(const GrayImage& left, const GrayImage& right, const SgbmParams& params,
                  int threads = 1);

/// Invalidate connected disparity regions smaller than window_px2. Pixels join
/// a region across 4-neighbor edges whose disparity difference is <= range.
void speckle_filter(DisparityMap& disp, int window_px2, double range);

}  // namespace sbv
