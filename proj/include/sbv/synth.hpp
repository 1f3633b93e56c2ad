#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbv/fusion.hpp"
#include "sbv/geometry.hpp"
#include "sbv/image.hpp"

namespace sbv {

enum class SceneKind { fronto_plane, slanted_plane, cylinder_on_background };

/// Description of a synthetic stereo scene with analytic ground truth.
struct SceneSpec {
    SceneKind kind = SceneKind::fronto_plane;
    int width = 640;
    int height = 360;
    StereoRig rig;
    std::uint64_t texture_seed = 1;

    double depth_m = 2.0;  ///< plane depth, or cylinder axis depth

    // slanted_plane: disparity gradient in px per px of image coordinate
    double tilt_u = 0.05;
    double tilt_v = 0.0;

    // cylinder_on_background
    double background_depth_m = 4.0;
    double radius_m = 0.015;
    double axis_y_m = 0.0;  ///< height of the horizontal axis in the camera frame

    void validate() const;
};

/// A rendered scene plus its exact ground truth. Depth is derived from the
/// stored disparity raster so depth == W / disparity holds bit-for-bit.
struct GroundTruth {
    GrayImage left;
    GrayImage right;
    DisparityMap disparity;  ///< left-referenced
    DepthMap depth;
    GrayImage visibility;  ///< 255 where the left pixel's match lies inside the right image
    std::optional<BranchMask> branch_mask;  ///< cylinder silhouette polygon
};

/// Deterministic band-limited value noise in [32, 224]: random lattice values
/// every 4 px, bilinearly interpolated, so subpixel shifts are well defined.
double texture_sample(std::uint64_t seed, double x, double y);

/// Render both views and the analytic ground truth for a scene.
GroundTruth render(const SceneSpec& spec);

/// One cylinder-on-background scene per requested distance, seeds fixed by
/// list position so duplicate distances still render independent textures.
std::vector<GroundTruth> render_distance_suite(const StereoRig& rig,
                                               const std::vector<double>& distances_m, int width,
                                               int height, double radius_m = 0.015);

/// Write left/right PGM, ground-truth disparity/depth PFM, the visibility
/// mask, the branch mask JSON (when present), and the rig calibration into
/// `dir`, creating it if needed.
void write_scene(const GroundTruth& gt, const SceneSpec& spec, const std::string& dir);

}  // namespace sbv
