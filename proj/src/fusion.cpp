#include "sbv/fusion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "sbv/image_io.hpp"

namespace sbv {

std::vector<PixelIndex> rasterize_mask_pixels(const BranchMask& mask, int width, int height) {
    if (width < 1 || height < 1) throw DimensionError("raster target is empty");
    const std::size_t n = mask.points.size();
    if (n < 3) return {};

    double min_v = mask.points[0].v, max_v = mask.points[0].v;
    for (const auto& p : mask.points) {
        min_v = std::min(min_v, p.v);
        max_v = std::max(max_v, p.v);
    }
    const int v_first = std::max(0, static_cast<int>(std::floor(min_v - 0.5)));
    const int v_last = std::min(height - 1, static_cast<int>(std::ceil(max_v)));

    std::vector<PixelIndex> pixels;
    std::vector<double> xs;
    for (int v = v_first; v <= v_last; ++v) {
        const double yc = v + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const PixelCoord& a = mask.points[i];
            const PixelCoord& b = mask.points[(i + 1) % n];
            if ((a.v <= yc) == (b.v <= yc)) continue;  // edge does not cross the scanline
            xs.push_back(a.u + (yc - a.v) * (b.u - a.u) / (b.v - a.v));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            // centers u+0.5 in [xs[i], xs[i+1])
            int u0 = static_cast<int>(std::ceil(xs[i] - 0.5));
            int u1 = static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1;
            u0 = std::max(u0, 0);
            u1 = std::min(u1, width - 1);
            for (int u = u0; u <= u1; ++u) pixels.push_back({u, v});
        }
    }
    return pixels;
}

std::vector<PixelIndex> rasterize_mask(const BranchMask& mask, int width, int height) {
    auto pixels = rasterize_mask_pixels(mask, width, height);
    if (pixels.empty())
        throw EmptyMaskError("mask '" + mask.label + "' covers no pixels inside the image");
    return pixels;
}

DistanceEstimate estimate_distance(const BranchMask& mask, const DepthMap& depth,
                                   double bin_width_m) {
    if (!(bin_width_m > 0.0)) throw ParamError("bin width must be positive");
    const auto pixels = rasterize_mask(mask, depth.width, depth.height);

    // Bin index floor(z/w) with a relative nudge so decimal bin edges land the
    // way exact arithmetic would (2.00 at w=0.05 belongs to bin 40).
    auto bin_of = [bin_width_m](double z) {
        return static_cast<long long>(std::floor(z / bin_width_m + 1e-9));
    };

    std::map<long long, std::pair<std::size_t, double>> bins;  // k -> (count, sum)
    std::size_t valid = 0;
    for (const PixelIndex& p : pixels) {
        const float z = depth.at(p.u, p.v);
        if (is_invalid(z)) continue;
        ++valid;
        auto& bin = bins[bin_of(z)];
        bin.first += 1;
        bin.second += z;
    }
    if (valid == 0) throw NoDataError("mask '" + mask.label + "' has no valid depth samples");

    long long best_k = 0;
    std::size_t best_count = 0;
    for (const auto& [k, cs] : bins) {  // ascending k, so ties keep the nearer bin
        if (cs.first > best_count) {
            best_count = cs.first;
            best_k = k;
        }
    }

    const auto& win = bins[best_k];
    DistanceEstimate est;
    est.label = mask.label;
    est.distance_m = win.second / static_cast<double>(win.first);
    est.pixel_count = pixels.size();
    est.bin_count = win.first;
    est.bin_lo = static_cast<double>(best_k) * bin_width_m;
    est.bin_hi = static_cast<double>(best_k + 1) * bin_width_m;
    return est;
}

void PipelineParams::validate() const {
    if (smooth_sigma < 0.0) throw ParamError("smoothing sigma must be >= 0");
    if (!(bin_width_m > 0.0)) throw ParamError("bin width must be positive");
    sgbm.validate();
    wls.validate();
}

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

}  // namespace

PipelineArtifacts match_pipeline(const GrayImage& left, const GrayImage& right,
                                 const StereoRig& rig, const PipelineParams& params) {
    params.validate();
    PipelineArtifacts out;

    auto t0 = std::chrono::steady_clock::now();
    const GrayImage sm_left =
        stage("smooth", [&] { return gaussian_smooth(left, params.smooth_sigma, params.threads); });
    const GrayImage sm_right =
        stage("smooth", [&] { return gaussian_smooth(right, params.smooth_sigma, params.threads); });
    out.ms_smooth = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    out.raw_disparity =
        stage("sgbm", [&] { return sgbm(sm_left, sm_right, params.sgbm, params.threads); });
    out.ms_match = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    if (params.use_wls) {
        out.disparity = stage(
            "wls", [&] { return wls_filter(out.raw_disparity, sm_left, params.wls, params.threads); });
    } else {
        out.disparity = out.raw_disparity;
    }
    out.ms_refine = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    out.depth = stage("depth", [&] { return depth_map_from_disparity(rig, out.disparity); });
    out.ms_depth = ms_since(t0);
    return out;
}

std::vector<DistanceEstimate> run_pipeline(const GrayImage& left, const GrayImage& right,
                                           const StereoRig& rig,
                                           const std::vector<BranchMask>& masks,
                                           const PipelineParams& params) {
    if (masks.empty()) return {};
    const PipelineArtifacts art = match_pipeline(left, right, rig, params);
    std::vector<DistanceEstimate> estimates;
    estimates.reserve(masks.size());
    for (const BranchMask& mask : masks)
        estimates.push_back(
            stage("fusion", [&] { return estimate_distance(mask, art.depth, params.bin_width_m); }));
    return estimates;
}

std::vector<BranchMask> load_masks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mask file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad mask JSON in " + path + ": " + e.what());
    }
    if (!j.contains("masks") || !j["masks"].is_array())
        throw ParseError("mask file " + path + " lacks a 'masks' array");
    std::vector<BranchMask> masks;
    for (const auto& jm : j["masks"]) {
        BranchMask m;
        m.label = jm.value("label", std::string("branch"));
        if (!jm.contains("points") || !jm["points"].is_array())
            throw ParseError("mask entry in " + path + " lacks a 'points' array");
        for (const auto& jp : jm["points"]) {
            if (!jp.is_array() || jp.size() != 2 || !jp[0].is_number() || !jp[1].is_number())
                throw ParseError("mask point in " + path + " is not a [u, v] pair");
            m.points.push_back({jp[0].get<double>(), jp[1].get<double>()});
        }
        masks.push_back(std::move(m));
    }
    return masks;
}

void save_masks(const std::vector<BranchMask>& masks, const std::string& image_name,
                const std::string& path) {
    nlohmann::json j;
    j["image"] = image_name;
    j["masks"] = nlohmann::json::array();
    for (const BranchMask& m : masks) {
        nlohmann::json jm;
        jm["label"] = m.label;
        jm["points"] = nlohmann::json::array();
        for (const PixelCoord& p : m.points) jm["points"].push_back({p.u, p.v});
        j["masks"].push_back(std::move(jm));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mask file: " + path);
    out << j.dump(2) << "\n";
}

std::string estimates_to_json(const std::vector<DistanceEstimate>& estimates) {
    nlohmann::json j = nlohmann::json::array();
    for (const DistanceEstimate& e : estimates) {
        nlohmann::json je;
        je["label"] = e.label;
        je["distance_m"] = e.distance_m;
        je["pixel_count"] = e.pixel_count;
        je["bin_count"] = e.bin_count;
        je["bin_lo"] = e.bin_lo;
        je["bin_hi"] = e.bin_hi;
        j.push_back(std::move(je));
    }
    return j.dump(2) + "\n";
}

void save_estimates(const std::vector<DistanceEstimate>& estimates, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write estimates file: " + path);
    out << estimates_to_json(estimates);
}

}  // namespace sbv
