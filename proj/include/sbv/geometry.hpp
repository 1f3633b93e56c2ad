#pragma once

#include <string>

#include "sbv/image.hpp"

namespace sbv {

/// Pinhole intrinsics shared by both cameras of a rectified rig.
struct CameraIntrinsics {
    double fx = 0.0;  ///< focal length along x, px
    double fy = 0.0;  ///< focal length along y, px
    double ox = 0.0;  ///< principal point column offset, px
    double oy = 0.0;  ///< principal point row offset, px

    CameraIntrinsics() = default;
    CameraIntrinsics(double fx_, double fy_, double ox_, double oy_);
};

/// Rectified stereo pair: shared intrinsics plus the baseline between optical centers.
struct StereoRig {
    CameraIntrinsics intrinsics;
    double baseline_m = 0.0;

    StereoRig() = default;
    StereoRig(CameraIntrinsics intr, double baseline);

    /// Disparity-depth constant: depth = W / disparity.
    double W() const { return baseline_m * intrinsics.fx; }
};

/// Continuous image coordinate (column u, row v).
struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

/// Point in the left-camera frame, meters.
struct Point3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

struct StereoProjection {
    PixelCoord left;
    PixelCoord right;
};

/// Project a 3-D point into both image planes. Requires p.z > 0.
/// Both projections share the v coordinate exactly (rectified rig).
StereoProjection project(const StereoRig& rig, const Point3D& p);

/// Recover the 3-D point from a rectified correspondence.
///   x = b (u_l - o_x) / d,  y = b f_x (v_l - o_y) / (f_y d),  z = b f_x / d,  d = u_l - u_r.
/// Throws NoIntersectionError when d <= 0 and InconsistentPairError when the rows
/// differ by more than `epipolar_tol_px`.
Point3D triangulate(const StereoRig& rig, const PixelCoord& left, const PixelCoord& right,
                    double epipolar_tol_px = 1.0);

/// depth = W / d for d > 0; the invalid sentinel for d <= 0 or invalid d.
float disparity_to_depth(const StereoRig& rig, float disparity_px);

/// Element-wise disparity_to_depth; dimensions preserved, invalid pixels stay invalid.
DepthMap depth_map_from_disparity(const StereoRig& rig, const DisparityMap& disp);

/// Load a rig from a JSON file {"fx","fy","ox","oy","baseline_m"}.
/// Rejects missing fields and non-positive fx/fy/baseline.
StereoRig load_calibration(const std::string& path);

/// Write the rig back out in the same schema.
void save_calibration(const StereoRig& rig, const std::string& path);

}  // namespace sbv
