#include "sbv/matching.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "sbv/threading.hpp"

namespace sbv {

namespace {

// Large-but-safe sentinel for the fused sweeps: survives + p1/p2 without overflow.
constexpr std::int32_t kInf = 1 << 29;

}  // namespace

void SgbmParams::validate() const {
    if (num_disparities < 8 || num_disparities % 8 != 0)
        throw ParamError("num_disparities must be a positive multiple of 8");
    if (!(0 < p1 && p1 < p2)) throw ParamError("penalties must satisfy 0 < p1 < p2");
    if (p2 >= (1 << 28)) throw ParamError("p2 too large (limit 2^28)");
    if (num_paths != 4 && num_paths != 8) throw ParamError("num_paths must be 4 or 8");
    if (uniqueness_ratio < 0) throw ParamError("uniqueness_ratio must be >= 0");
    if (lr_max_diff < 0.0) throw ParamError("lr_max_diff must be >= 0");
    if (speckle_window < 0) throw ParamError("speckle_window must be >= 0");
    if (speckle_range < 0.0) throw ParamError("speckle_range must be >= 0");
}

CensusGrid census_transform(const GrayImage& img, int radius, int threads) {
    if (radius != 1 && radius != 2)
        throw ParamError("census radius must be 1 (3x3) or 2 (5x5)");
    const int side = 2 * radius + 1;
    if (img.width < side || img.height < side)
        throw DimensionError("image smaller than the census window");

    CensusGrid grid;
    grid.width = img.width;
    grid.height = img.height;
    grid.bits = side * side - 1;
    grid.descriptors.resize(static_cast<std::size_t>(img.width) * img.height);

    parallel_chunks(img.height, threads, [&](int v0, int v1) {
        for (int v = v0; v < v1; ++v)
            for (int u = 0; u < img.width; ++u) {
                const std::uint8_t center = img.at(u, v);
                std::uint32_t desc = 0;
                for (int dy = -radius; dy <= radius; ++dy)
                    for (int dx = -radius; dx <= radius; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        desc = (desc << 1) | (img.at_clamped(u + dx, v + dy) < center ? 1u : 0u);
                    }
                grid.descriptors[static_cast<std::size_t>(v) * img.width + u] = desc;
            }
    });
    return grid;
}

namespace {

CostVolume hamming_volume(const CensusGrid& base, const CensusGrid& other, int num_disparities,
                          int threads, bool right_base) {
    if (base.width != other.width || base.height != other.height || base.bits != other.bits)
        throw DimensionError("census grids differ in size");
    if (num_disparities < 1) throw ParamError("num_disparities must be positive");

    const int width = base.width, height = base.height, D = num_disparities;
    const std::int32_t saturated = base.bits;
    CostVolume vol(width, height, D);

    parallel_chunks(height, threads, [&](int v0, int v1) {
        for (int v = v0; v < v1; ++v) {
            const std::uint32_t* brow =
                base.descriptors.data() + static_cast<std::size_t>(v) * width;
            const std::uint32_t* orow =
                other.descriptors.data() + static_cast<std::size_t>(v) * width;
            std::int32_t* crow = vol.cost.data() + static_cast<std::size_t>(v) * width * D;
            for (int u = 0; u < width; ++u) {
                std::int32_t* c = crow + static_cast<std::size_t>(u) * D;
                const std::uint32_t ref = brow[u];
                for (int d = 0; d < D; ++d) {
                    const int uo = right_base ? u + d : u - d;
                    c[d] = (uo < 0 || uo >= width)
                               ? saturated
                               : static_cast<std::int32_t>(std::popcount(ref ^ orow[uo]));
                }
            }
        }
    });
    return vol;
}

}  // namespace

CostVolume compute_cost_volume(const CensusGrid& left, const CensusGrid& right,
                               int num_disparities, int threads) {
    return hamming_volume(left, right, num_disparities, threads, false);
}

CostVolume compute_cost_volume_right_base(const CensusGrid& left, const CensusGrid& right,
                                          int num_disparities, int threads) {
    return hamming_volume(right, left, num_disparities, threads, true);
}

DisparityMap block_match(const GrayImage& left, const GrayImage& right, int num_disparities,
                         int block, int threads) {
    if (!left.same_size(right)) throw DimensionError("stereo pair sizes differ");
    if (block < 3 || block % 2 == 0) throw ParamError("block size must be odd and >= 3");
    if (num_disparities < 1) throw ParamError("num_disparities must be positive");

    const int r = block / 2;
    DisparityMap disp(left.width, left.height);

    parallel_chunks(left.height, threads, [&](int v0, int v1) {
        for (int v = v0; v < v1; ++v)
            for (int u = 0; u < left.width; ++u) {
                long best_cost = std::numeric_limits<long>::max();
                int best_d = 0;
                for (int d = 0; d < num_disparities; ++d) {
                    if (u - d < 0) continue;
                    long sad = 0;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx)
                            sad += std::abs(static_cast<int>(left.at_clamped(u + dx, v + dy)) -
                                            static_cast<int>(right.at_clamped(u - d + dx, v + dy)));
                    if (sad < best_cost) {
                        best_cost = sad;
                        best_d = d;
                    }
                }
                disp.at(u, v) = static_cast<float>(best_d);
            }
    });
    return disp;
}

CostVolume aggregate_path(const CostVolume& volume, int dr, int dc, std::int32_t p1,
                          std::int32_t p2) {
    const bool legal = (dr == 0 || dr == 1 || dr == -1) && (dc == 0 || dc == 1 || dc == -1) &&
                       !(dr == 0 && dc == 0);
    if (!legal) throw ParamError("path direction must be one of the eight compass steps");
    if (volume.width < 1 || volume.height < 1 || volume.num_disparities < 1)
        throw DimensionError("cost volume is empty");

    const int width = volume.width, height = volume.height, D = volume.num_disparities;
    CostVolume out(width, height, D);
    std::vector<std::int32_t> minmap(static_cast<std::size_t>(width) * height);

    const int v_begin = dr >= 0 ? 0 : height - 1;
    const int v_step = dr >= 0 ? 1 : -1;
    const int u_begin = dc >= 0 ? 0 : width - 1;
    const int u_step = dc >= 0 ? 1 : -1;

    for (int v = v_begin; v >= 0 && v < height; v += v_step) {
        for (int u = u_begin; u >= 0 && u < width; u += u_step) {
            const std::size_t pix = static_cast<std::size_t>(v) * width + u;
            const std::int32_t* c = volume.cost.data() + pix * D;
            std::int32_t* L = out.cost.data() + pix * D;
            const int pv = v - dr, pu = u - dc;
            std::int32_t m = std::numeric_limits<std::int32_t>::max();
            if (pv < 0 || pv >= height || pu < 0 || pu >= width) {
                for (int d = 0; d < D; ++d) {
                    L[d] = c[d];
                    m = std::min(m, L[d]);
                }
            } else {
                const std::size_t ppix = static_cast<std::size_t>(pv) * width + pu;
                const std::int32_t* Lp = out.cost.data() + ppix * D;
                const std::int64_t pmin = minmap[ppix];
                for (int d = 0; d < D; ++d) {
                    std::int64_t best = Lp[d];
                    if (d > 0) best = std::min(best, static_cast<std::int64_t>(Lp[d - 1]) + p1);
                    if (d < D - 1) best = std::min(best, static_cast<std::int64_t>(Lp[d + 1]) + p1);
                    best = std::min(best, pmin + p2);
                    const std::int64_t val = c[d] + best - pmin;
                    L[d] = static_cast<std::int32_t>(
                        std::min<std::int64_t>(val, std::numeric_limits<std::int32_t>::max()));
                    m = std::min(m, L[d]);
                }
            }
            minmap[pix] = m;
        }
    }
    return out;
}

double subpixel_refine(double c_minus, double c0, double c_plus) {
    const double denom = 2.0 * (c_minus - 2.0 * c0 + c_plus);
    if (denom == 0.0) return 0.0;
    return std::clamp((c_minus - c_plus) / denom, -0.5, 0.5);
}

namespace {

// One pixel of one path. prev_pad holds the predecessor costs with kInf pads at
// [0] and [D+1]; results go to out[0..D).
inline std::int32_t path_step(const std::int32_t* cost, const std::int32_t* prev_pad,
                              std::int32_t prev_min, std::int32_t p1, std::int32_t p2, int D,
                              std::int32_t* out) {
    const std::int32_t base = prev_min + p2;
    std::int32_t m = kInf;
    for (int d = 0; d < D; ++d) {
        std::int32_t best = prev_pad[d + 1];
        best = std::min(best, std::min(prev_pad[d], prev_pad[d + 2]) + p1);
        best = std::min(best, base);
        const std::int32_t val = cost[d] + (best - prev_min);
        out[d] = val;
        m = std::min(m, val);
    }
    return m;
}

inline std::int32_t path_start(const std::int32_t* cost, int D, std::int32_t* out) {
    std::int32_t m = kInf;
    for (int d = 0; d < D; ++d) {
        out[d] = cost[d];
        m = std::min(m, cost[d]);
    }
    return m;
}

// Sum of all directional passes, computed with two fused sweeps so no per-path
// volume is materialized. Sequential by construction; addition order is fixed,
// so the result is independent of the caller's thread count.
std::vector<std::int32_t> aggregate_sum(const CostVolume& vol, int num_paths, std::int32_t p1,
                                        std::int32_t p2) {
    const int width = vol.width, height = vol.height, D = vol.num_disparities;
    const int pad = D + 2;
    const bool diagonals = num_paths == 8;

    std::vector<std::int32_t> sum(vol.cost.size());
    std::vector<std::int32_t> tmp(static_cast<std::size_t>(D));

    auto make_line = [&](int slots) {
        return std::vector<std::int32_t>(static_cast<std::size_t>(slots) * pad, kInf);
    };
    std::vector<std::int32_t> hor_pad = make_line(1), ver_pad = make_line(width);
    std::vector<std::int32_t> dg1_pad = make_line(width), dg2_pad = make_line(width);
    std::vector<std::int32_t> ver_min(static_cast<std::size_t>(width)),
        dg1_min(static_cast<std::size_t>(width)), dg2_min(static_cast<std::size_t>(width));
    std::int32_t hor_min = 0;

    auto store = [&](std::int32_t* slot) { std::memcpy(slot + 1, tmp.data(), sizeof(std::int32_t) * D); };

    const std::int32_t* cost = vol.cost.data();

    // Forward sweep: paths from the left, top, top-left, top-right.
    for (int v = 0; v < height; ++v) {
        const std::size_t rowbase = static_cast<std::size_t>(v) * width;
        for (int u = 0; u < width; ++u) {  // direction (0,+1)
            const std::int32_t* c = cost + (rowbase + u) * D;
            hor_min = (u == 0) ? path_start(c, D, tmp.data())
                               : path_step(c, hor_pad.data(), hor_min, p1, p2, D, tmp.data());
            store(hor_pad.data());
            std::int32_t* s = sum.data() + (rowbase + u) * D;
            for (int d = 0; d < D; ++d) s[d] = tmp[d];
        }
        for (int u = 0; u < width; ++u) {  // direction (+1,0)
            const std::int32_t* c = cost + (rowbase + u) * D;
            std::int32_t* slot = ver_pad.data() + static_cast<std::size_t>(u) * pad;
            const std::int32_t m = (v == 0)
                                       ? path_start(c, D, tmp.data())
                                       : path_step(c, slot, ver_min[u], p1, p2, D, tmp.data());
            store(slot);
            ver_min[u] = m;
            std::int32_t* s = sum.data() + (rowbase + u) * D;
            for (int d = 0; d < D; ++d) s[d] += tmp[d];
        }
        if (diagonals) {
            for (int u = width - 1; u >= 0; --u) {  // direction (+1,+1), predecessor (v-1,u-1)
                const std::int32_t* c = cost + (rowbase + u) * D;
                std::int32_t m;
                if (v == 0 || u == 0) {
                    m = path_start(c, D, tmp.data());
                } else {
                    const std::int32_t* prev =
                        dg1_pad.data() + static_cast<std::size_t>(u - 1) * pad;
                    m = path_step(c, prev, dg1_min[u - 1], p1, p2, D, tmp.data());
                }
                store(dg1_pad.data() + static_cast<std::size_t>(u) * pad);
                dg1_min[u] = m;
                std::int32_t* s = sum.data() + (rowbase + u) * D;
                for (int d = 0; d < D; ++d) s[d] += tmp[d];
            }
            for (int u = 0; u < width; ++u) {  // direction (+1,-1), predecessor (v-1,u+1)
                const std::int32_t* c = cost + (rowbase + u) * D;
                std::int32_t m;
                if (v == 0 || u == width - 1) {
                    m = path_start(c, D, tmp.data());
                } else {
                    const std::int32_t* prev =
                        dg2_pad.data() + static_cast<std::size_t>(u + 1) * pad;
                    m = path_step(c, prev, dg2_min[u + 1], p1, p2, D, tmp.data());
                }
                store(dg2_pad.data() + static_cast<std::size_t>(u) * pad);
                dg2_min[u] = m;
                std::int32_t* s = sum.data() + (rowbase + u) * D;
                for (int d = 0; d < D; ++d) s[d] += tmp[d];
            }
        }
    }

    // Backward sweep: paths from the right, bottom, bottom-right, bottom-left.
    std::fill(ver_pad.begin(), ver_pad.end(), kInf);
    std::fill(dg1_pad.begin(), dg1_pad.end(), kInf);
    std::fill(dg2_pad.begin(), dg2_pad.end(), kInf);
    for (int v = height - 1; v >= 0; --v) {
        const std::size_t rowbase = static_cast<std::size_t>(v) * width;
        for (int u = width - 1; u >= 0; --u) {  // direction (0,-1)
            const std::int32_t* c = cost + (rowbase + u) * D;
            hor_min = (u == width - 1)
                          ? path_start(c, D, tmp.data())
                          : path_step(c, hor_pad.data(), hor_min, p1, p2, D, tmp.data());
            store(hor_pad.data());
            std::int32_t* s = sum.data() + (rowbase + u) * D;
            for (int d = 0; d < D; ++d) s[d] += tmp[d];
        }
        for (int u = 0; u < width; ++u) {  // direction (-1,0)
            const std::int32_t* c = cost + (rowbase + u) * D;
            std::int32_t* slot = ver_pad.data() + static_cast<std::size_t>(u) * pad;
            const std::int32_t m = (v == height - 1)
                                       ? path_start(c, D, tmp.data())
                                       : path_step(c, slot, ver_min[u], p1, p2, D, tmp.data());
            store(slot);
            ver_min[u] = m;
            std::int32_t* s = sum.data() + (rowbase + u) * D;
            for (int d = 0; d < D; ++d) s[d] += tmp[d];
        }
        if (diagonals) {
            for (int u = 0; u < width; ++u) {  // direction (-1,-1), predecessor (v+1,u+1)
                const std::int32_t* c = cost + (rowbase + u) * D;
                std::int32_t m;
                if (v == height - 1 || u == width - 1) {
                    m = path_start(c, D, tmp.data());
                } else {
                    const std::int32_t* prev =
                        dg1_pad.data() + static_cast<std::size_t>(u + 1) * pad;
                    m = path_step(c, prev, dg1_min[u + 1], p1, p2, D, tmp.data());
                }
                store(dg1_pad.data() + static_cast<std::size_t>(u) * pad);
                dg1_min[u] = m;
                std::int32_t* s = sum.data() + (rowbase + u) * D;
                for (int d = 0; d < D; ++d) s[d] += tmp[d];
            }
            for (int u = width - 1; u >= 0; --u) {  // direction (-1,+1), predecessor (v+1,u-1)
                const std::int32_t* c = cost + (rowbase + u) * D;
                std::int32_t m;
                if (v == height - 1 || u == 0) {
                    m = path_start(c, D, tmp.data());
                } else {
                    const std::int32_t* prev =
                        dg2_pad.data() + static_cast<std::size_t>(u - 1) * pad;
                    m = path_step(c, prev, dg2_min[u - 1], p1, p2, D, tmp.data());
                }
                store(dg2_pad.data() + static_cast<std::size_t>(u) * pad);
                dg2_min[u] = m;
                std::int32_t* s = sum.data() + (rowbase + u) * D;
                for (int d = 0; d < D; ++d) s[d] += tmp[d];
            }
        }
    }
    return sum;
}

}  // namespace

std::vector<std::int32_t> aggregate_paths_sum(const CostVolume& volume, int num_paths,
                                              std::int32_t p1, std::int32_t p2) {
    if (num_paths != 4 && num_paths != 8) throw ParamError("num_paths must be 4 or 8");
    if (p2 >= (1 << 28)) throw ParamError("p2 too large (limit 2^28)");
    if (volume.width < 1 || volume.height < 1 || volume.num_disparities < 1)
        throw DimensionError("cost volume is empty");
    return aggregate_sum(volume, num_paths, p1, p2);
}

namespace {

// Winner-take-all over the aggregated costs with the uniqueness test and
// subpixel parabola refinement.
//
// Two ways to lose validity:
//  - degenerate evidence: every candidate the pixel can actually reach (its
//    raw cost did not come from border saturation) carries the same cost, so
//    the data cannot prefer any disparity. This is what flags textureless
//    input, which otherwise inherits a synthetic aggregated margin from the
//    saturated border entries.
//  - margin failure: best*(100+ratio) >= 100*second_best on the aggregated
//    cost, second best taken outside the winner's +-1 band, ties invalid.
DisparityMap wta_disparity(const std::vector<std::int32_t>& sum, const CostVolume& raw,
                           bool right_base, int uniqueness_ratio, int threads) {
    const int width = raw.width, height = raw.height, D = raw.num_disparities;
    DisparityMap disp(width, height);
    parallel_chunks(height, threads, [&](int v0, int v1) {
        for (int v = v0; v < v1; ++v)
            for (int u = 0; u < width; ++u) {
                const std::size_t pix = static_cast<std::size_t>(v) * width + u;
                const std::int32_t* s = sum.data() + pix * D;
                const std::int32_t* c = raw.cost.data() + pix * D;

                const int reach = right_base ? (width - u) : (u + 1);
                const int in_range = std::min(reach, D);  // candidates with real evidence
                bool all_tied = true;
                for (int d = 1; d < in_range; ++d)
                    if (c[d] != c[0]) {
                        all_tied = false;
                        break;
                    }
                if (all_tied) {
                    disp.at(u, v) = invalid_value();
                    continue;
                }

                int best_d = 0;
                std::int32_t best = s[0];
                for (int d = 1; d < D; ++d)
                    if (s[d] < best) {
                        best = s[d];
                        best_d = d;
                    }
                std::int32_t second = std::numeric_limits<std::int32_t>::max();
                for (int d = 0; d < D; ++d)
                    if (std::abs(d - best_d) > 1) second = std::min(second, s[d]);
                if (second != std::numeric_limits<std::int32_t>::max() &&
                    static_cast<std::int64_t>(best) * (100 + uniqueness_ratio) >=
                        static_cast<std::int64_t>(second) * 100) {
                    disp.at(u, v) = invalid_value();
                    continue;
                }
                double value = best_d;
                if (best_d > 0 && best_d < D - 1)
                    value += subpixel_refine(s[best_d - 1], s[best_d], s[best_d + 1]);
                disp.at(u, v) = static_cast<float>(value);
            }
    });
    return disp;
}

}  // namespace

void speckle_filter(DisparityMap& disp, int window_px2, double range) {
    if (window_px2 <= 0) return;
    const int width = disp.width, height = disp.height;
    std::vector<std::int32_t> label(disp.values.size(), -1);
    std::vector<std::size_t> stack, members;

    std::int32_t next_label = 0;
    for (std::size_t seed = 0; seed < disp.values.size(); ++seed) {
        if (label[seed] >= 0 || is_invalid(disp.values[seed])) continue;
        stack.assign(1, seed);
        members.clear();
        label[seed] = next_label;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            members.push_back(p);
            const int v = static_cast<int>(p) / width, u = static_cast<int>(p) % width;
            const float dv = disp.values[p];
            const int nu[4] = {u - 1, u + 1, u, u};
            const int nv[4] = {v, v, v - 1, v + 1};
            for (int k = 0; k < 4; ++k) {
                if (nu[k] < 0 || nu[k] >= width || nv[k] < 0 || nv[k] >= height) continue;
                const std::size_t q = static_cast<std::size_t>(nv[k]) * width + nu[k];
                if (label[q] >= 0 || is_invalid(disp.values[q])) continue;
                if (std::abs(disp.values[q] - dv) <= range) {
                    label[q] = next_label;
                    stack.push_back(q);
                }
            }
        }
        if (static_cast<int>(members.size()) < window_px2)
            for (std::size_t p : members) disp.values[p] = invalid_value();
        ++next_label;
    }
}

DisparityMap sgbm(const GrayImage& left, const GrayImage& right, const SgbmParams& params,
                  int threads) {
    params.validate();
    if (!left.same_size(right)) throw DimensionError("stereo pair sizes differ");
    if (left.width < 16 || left.height < 16)
        throw DimensionError("sgbm needs images of at least 16x16");

    const int width = left.width, height = left.height, D = params.num_disparities;

    const CensusGrid census_l = census_transform(left, 2, threads);
    const CensusGrid census_r = census_transform(right, 2, threads);

    DisparityMap disp_l, disp_r;
    {
        const CostVolume vol = compute_cost_volume(census_l, census_r, D, threads);
        const auto sum = aggregate_sum(vol, params.num_paths, params.p1, params.p2);
        disp_l = wta_disparity(sum, vol, false, params.uniqueness_ratio, threads);
    }
    {
        const CostVolume vol = compute_cost_volume_right_base(census_l, census_r, D, threads);
        const auto sum = aggregate_sum(vol, params.num_paths, params.p1, params.p2);
        disp_r = wta_disparity(sum, vol, true, params.uniqueness_ratio, threads);
    }

    // Left-right consistency: a left match must be confirmed by the
    // right-referenced match it points at.
    parallel_chunks(height, threads, [&](int v0, int v1) {
        for (int v = v0; v < v1; ++v)
            for (int u = 0; u < width; ++u) {
                const float dl = disp_l.at(u, v);
                if (is_invalid(dl)) continue;
                const int ur = u - static_cast<int>(std::lround(dl));
                if (ur < 0 || ur >= width) {
                    disp_l.at(u, v) = invalid_value();
                    continue;
                }
                const float dr = disp_r.at(ur, v);
                if (is_invalid(dr) || std::abs(dl - dr) > params.lr_max_diff)
                    disp_l.at(u, v) = invalid_value();
            }
    });

    speckle_filter(disp_l, params.speckle_window, params.speckle_range);
    return disp_l;
}

}  // namespace sbv
