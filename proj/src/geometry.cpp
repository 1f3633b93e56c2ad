#include "sbv/geometry.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace sbv {

CameraIntrinsics::CameraIntrinsics(double fx_, double fy_, double ox_, double oy_)
    : fx(fx_), fy(fy_), ox(ox_), oy(oy_) {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ParamError("focal lengths must be positive");
    if (ox < 0.0 || oy < 0.0) throw ParamError("principal point offsets must be non-negative");
}

StereoRig::StereoRig(CameraIntrinsics intr, double baseline) : intrinsics(intr), baseline_m(baseline) {
    if (!(baseline_m > 0.0)) throw ParamError("baseline must be positive");
}

StereoProjection project(const StereoRig& rig, const Point3D& p) {
    if (!(p.z > 0.0)) throw DomainError("cannot project a point with non-positive depth");
    const CameraIntrinsics& k = rig.intrinsics;
    StereoProjection out;
    out.left.u = k.fx * p.x / p.z + k.ox;
    out.left.v = k.fy * p.y / p.z + k.oy;
    out.right.u = k.fx * (p.x - rig.baseline_m) / p.z + k.ox;
    out.right.v = out.left.v;
    return out;
}

Point3D triangulate(const StereoRig& rig, const PixelCoord& left, const PixelCoord& right,
                    double epipolar_tol_px) {
    if (std::abs(left.v - right.v) > epipolar_tol_px)
        throw InconsistentPairError("correspondence rows differ by more than the epipolar tolerance");
    const double d = left.u - right.u;
    if (!(d > 0.0)) throw NoIntersectionError("non-positive disparity, rays do not intersect");
    const CameraIntrinsics& k = rig.intrinsics;
    Point3D p;
    p.x = rig.baseline_m * (left.u - k.ox) / d;
    p.y = rig.baseline_m * k.fx * (left.v - k.oy) / (k.fy * d);
    p.z = rig.baseline_m * k.fx / d;
    return p;
}

float disparity_to_depth(const StereoRig& rig, float disparity_px) {
    if (is_invalid(disparity_px) || disparity_px <= 0.0f) return invalid_value();
    return static_cast<float>(rig.W() / static_cast<double>(disparity_px));
}

DepthMap depth_map_from_disparity(const StereoRig& rig, const DisparityMap& disp) {
    if (disp.width < 1 || disp.height < 1 || disp.values.empty())
        throw DimensionError("disparity map is empty");
    DepthMap depth(disp.width, disp.height);
    for (std::size_t i = 0; i < disp.values.size(); ++i)
        depth.values[i] = disparity_to_depth(rig, disp.values[i]);
    return depth;
}

StereoRig load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open calibration file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad calibration JSON in " + path + ": " + e.what());
    }
    for (const char* key : {"fx", "fy", "ox", "oy", "baseline_m"}) {
        if (!j.contains(key) || !j[key].is_number())
            throw ParseError("calibration file " + path + " is missing numeric field '" + key + "'");
    }
    const double fx = j["fx"], fy = j["fy"], ox = j["ox"], oy = j["oy"], b = j["baseline_m"];
    if (!(fx > 0.0) || !(fy > 0.0) || !(b > 0.0))
        throw ParseError("calibration file " + path + " has non-positive fx, fy, or baseline_m");
    return StereoRig(CameraIntrinsics(fx, fy, ox, oy), b);
}

void save_calibration(const StereoRig& rig, const std::string& path) {
    nlohmann::json j;
    j["fx"] = rig.intrinsics.fx;
    j["fy"] = rig.intrinsics.fy;
    j["ox"] = rig.intrinsics.ox;
    j["oy"] = rig.intrinsics.oy;
    j["baseline_m"] = rig.baseline_m;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write calibration file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace sbv
