#pragma once

#include <string>
#include <vector>

#include "sbv/geometry.hpp"
#include "sbv/image.hpp"
#include "sbv/matching.hpp"
#include "sbv/refine.hpp"

namespace sbv {

/// Labeled polygon over left-image pixel coordinates, as produced by an
/// external segmentation model.
struct BranchMask {
    std::string label;
    std::vector<PixelCoord> points;
};

struct PixelIndex {
    int u = 0;
    int v = 0;
    friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

/// Pixels whose center (u+0.5, v+0.5) lies inside the polygon under the
/// even-odd rule, clipped to [0,width) x [0,height), sorted row-major.
/// Throws EmptyMaskError when nothing is covered (degenerate or fully
/// off-image polygon).
std::vector<PixelIndex> rasterize_mask(const BranchMask& mask, int width, int height);

/// Non-throwing variant used where an empty result is meaningful.
std::vector<PixelIndex> rasterize_mask_pixels(const BranchMask& mask, int width, int height);

/// One fused measurement for one branch mask.
struct DistanceEstimate {
    std::string label;
    double distance_m = 0.0;   ///< mean depth inside the winning histogram bin
    std::size_t pixel_count = 0;  ///< rasterized mask pixels
    std::size_t bin_count = 0;    ///< depth samples in the winning bin
    double bin_lo = 0.0;
    double bin_hi = 0.0;
};

/// Histogram-mode distance: collect finite depths at masked pixels, bin them
/// into [k*w, (k+1)*w) anchored at zero, pick the densest bin (ties go to the
/// nearer bin), and average the depths inside it.
DistanceEstimate estimate_distance(const BranchMask& mask, const DepthMap& depth,
                                   double bin_width_m);

struct PipelineParams {
    double smooth_sigma = 1.0;  ///< preprocessing Gaussian, px
    SgbmParams sgbm;
    WlsParams wls;
    bool use_wls = true;
    double bin_width_m = 0.05;
    int threads = 0;  ///< 0 = auto

    void validate() const;
};

/// Everything the depth half of the pipeline produces, for callers that need
/// the intermediate rasters.
struct PipelineArtifacts {
    DisparityMap raw_disparity;  ///< matcher output before refinement
    DisparityMap disparity;      ///< after WLS (or raw copy with --no-wls)
    DepthMap depth;
    double ms_smooth = 0.0;
    double ms_match = 0.0;
    double ms_refine = 0.0;
    double ms_depth = 0.0;
};

/// smooth -> sgbm -> wls -> depth. Errors are rethrown as PipelineError
/// annotated with the failing stage.
PipelineArtifacts match_pipeline(const GrayImage& left, const GrayImage& right,
                                 const StereoRig& rig, const PipelineParams& params);

/// Full measurement pipeline: match_pipeline then one DistanceEstimate per
/// mask. Deterministic: identical inputs give identical outputs regardless of
/// thread count. An empty mask list short-circuits to an empty result.
std::vector<DistanceEstimate> run_pipeline(const GrayImage& left, const GrayImage& right,
                                           const StereoRig& rig,
                                           const std::vector<BranchMask>& masks,
                                           const PipelineParams& params);

/// Mask file: {"image": name, "masks": [{"label": ..., "points": [[u,v], ...]}]}.
std::vector<BranchMask> load_masks(const std::string& path);
void save_masks(const std::vector<BranchMask>& masks, const std::string& image_name,
                const std::string& path);

/// Estimates serialize as a JSON array of records.
std::string estimates_to_json(const std::vector<DistanceEstimate>& estimates);
void save_estimates(const std::vector<DistanceEstimate>& estimates, const std::string& path);

}  // namespace sbv
