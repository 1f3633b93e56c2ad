#include "sbv/synth.hpp"

#include <cmath>
#include <filesystem>

#include "sbv/image_io.hpp"

namespace sbv {

namespace {

constexpr double kLatticePx = 4.0;  // texture correlation length

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double lattice_value(std::uint64_t seed, std::int64_t i, std::int64_t j) {
    std::uint64_t h = splitmix64(seed ^ (static_cast<std::uint64_t>(i) * 0xA24BAED4963EE407ull));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(j) * 0x9FB21C651E98DF25ull));
    return static_cast<double>(h >> 11) * 0x1.0p-53;  // uniform in [0, 1)
}

}  // namespace

double texture_sample(std::uint64_t seed, double x, double y) {
    const double gx = x / kLatticePx, gy = y / kLatticePx;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const auto i = static_cast<std::int64_t>(fx);
    const auto j = static_cast<std::int64_t>(fy);
    const double tx = gx - fx, ty = gy - fy;
    const double v00 = lattice_value(seed, i, j);
    const double v10 = lattice_value(seed, i + 1, j);
    const double v01 = lattice_value(seed, i, j + 1);
    const double v11 = lattice_value(seed, i + 1, j + 1);
    const double top = v00 + (v10 - v00) * tx;
    const double bot = v01 + (v11 - v01) * tx;
    const double t = top + (bot - top) * ty;
    return 32.0 + 192.0 * t;
}

void SceneSpec::validate() const {
    if (width < 1 || height < 1) throw ParamError("scene dimensions must be positive");
    if (!(rig.baseline_m > 0.0) || !(rig.intrinsics.fx > 0.0))
        throw ParamError("scene rig is not initialized");
    if (!(depth_m > 0.0)) throw ParamError("scene depth must be positive");
    switch (kind) {
        case SceneKind::fronto_plane:
            break;
        case SceneKind::slanted_plane:
            if (tilt_u >= 1.0) throw ParamError("slanted plane tilt_u must be < 1");
            break;
        case SceneKind::cylinder_on_background:
            if (!(radius_m > 0.0)) throw ParamError("cylinder radius must be positive");
            if (!(background_depth_m > depth_m + radius_m))
                throw ParamError("cylinder must sit in front of the background");
            break;
    }
}

namespace {

std::uint8_t tex_byte(std::uint64_t seed, double x, double y) {
    return static_cast<std::uint8_t>(std::lround(texture_sample(seed, x, y)));
}

// Depth of the horizontal cylinder along the view ray of image row v, or the
// background depth when the ray misses. The ray direction is (dy, 1) in the
// y-z plane; the axis runs along x through (axis_y, depth).
double cylinder_row_depth(const SceneSpec& spec, double v) {
    const CameraIntrinsics& k = spec.rig.intrinsics;
    const double dy = (v - k.oy) / k.fy;
    const double a = dy * dy + 1.0;
    const double b = -2.0 * (dy * spec.axis_y_m + spec.depth_m);
    const double c = spec.axis_y_m * spec.axis_y_m + spec.depth_m * spec.depth_m -
                     spec.radius_m * spec.radius_m;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return spec.background_depth_m;
    const double t = (-b - std::sqrt(disc)) / (2.0 * a);
    return t > 0.0 ? t : spec.background_depth_m;
}

}  // namespace

GroundTruth render(const SceneSpec& spec) {
    spec.validate();
    const int width = spec.width, height = spec.height;
    const CameraIntrinsics& k = spec.rig.intrinsics;
    const double W = spec.rig.W();

    GroundTruth gt;
    gt.left = GrayImage(width, height);
    gt.right = GrayImage(width, height);
    gt.disparity = DisparityMap(width, height);
    gt.depth = DepthMap(width, height);
    gt.visibility = GrayImage(width, height);

    // The texture is parameterized over left-image coordinates; the right view
    // samples it at the warped position u + d, which keeps integer-disparity
    // planes exact translates of the left image.
    switch (spec.kind) {
        case SceneKind::fronto_plane: {
            const double d = W / spec.depth_m;
            for (int v = 0; v < height; ++v)
                for (int u = 0; u < width; ++u) {
                    gt.left.at(u, v) = tex_byte(spec.texture_seed, u, v);
                    gt.right.at(u, v) = tex_byte(spec.texture_seed, u + d, v);
                    gt.disparity.at(u, v) = static_cast<float>(d);
                }
            break;
        }
        case SceneKind::slanted_plane: {
            const double d0 = W / spec.depth_m;
            // Disparity is affine over the image for a planar surface:
            // d(u,v) = d0 + tu*(u - ox) + tv*(v - oy).
            for (int v = 0; v < height; ++v) {
                const double dv_term = d0 - spec.tilt_u * k.ox + spec.tilt_v * (v - k.oy);
                for (int u = 0; u < width; ++u) {
                    const double d = d0 + spec.tilt_u * (u - k.ox) + spec.tilt_v * (v - k.oy);
                    if (!(d > 0.0))
                        throw ParamError("slanted plane produces non-positive disparity in frame");
                    gt.left.at(u, v) = tex_byte(spec.texture_seed, u, v);
                    // Left-image column seen by right pixel u: u_l - d(u_l) = u.
                    const double u_l = (u + dv_term) / (1.0 - spec.tilt_u);
                    gt.right.at(u, v) = tex_byte(spec.texture_seed, u_l, v);
                    gt.disparity.at(u, v) = static_cast<float>(d);
                }
            }
            break;
        }
        case SceneKind::cylinder_on_background: {
            // The cylinder renders dark against a bright background so the
            // guide image carries the silhouette edge, the way a real branch
            // stands out. Both tones keep a similar texture swing to avoid
            // biasing boundary-row matches toward the livelier side; all
            // values stay inside the 32..224 texture range.
            auto shade_cylinder = [](double t) { return 32.0 + (t - 32.0) * 0.40; };
            auto shade_background = [](double t) { return 112.0 + (t - 32.0) * 0.58; };
            int first_row = -1, last_row = -1;
            for (int v = 0; v < height; ++v) {
                const double z = cylinder_row_depth(spec, v);
                const bool on_cylinder = z != spec.background_depth_m;
                if (on_cylinder) {
                    if (first_row < 0) first_row = v;
                    last_row = v;
                }
                const double d = W / z;
                for (int u = 0; u < width; ++u) {
                    double tl = texture_sample(spec.texture_seed, u, v);
                    double tr = texture_sample(spec.texture_seed, u + d, v);
                    tl = on_cylinder ? shade_cylinder(tl) : shade_background(tl);
                    tr = on_cylinder ? shade_cylinder(tr) : shade_background(tr);
                    gt.left.at(u, v) = static_cast<std::uint8_t>(std::lround(tl));
                    gt.right.at(u, v) = static_cast<std::uint8_t>(std::lround(tr));
                    gt.disparity.at(u, v) = static_cast<float>(d);
                }
            }
            if (first_row >= 0) {
                BranchMask mask;
                mask.label = "branch";
                mask.points = {{0.0, static_cast<double>(first_row)},
                               {static_cast<double>(width), static_cast<double>(first_row)},
                               {static_cast<double>(width), static_cast<double>(last_row + 1)},
                               {0.0, static_cast<double>(last_row + 1)}};
                gt.branch_mask = std::move(mask);
            }
            break;
        }
    }

    // Depth derives from the stored disparity so the pair stays consistent at
    // float precision; the matcher can never see the match of a pixel whose
    // correspondence falls off the right image.
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u) {
            const float d = gt.disparity.at(u, v);
            gt.depth.at(u, v) = static_cast<float>(W / static_cast<double>(d));
            gt.visibility.at(u, v) = (u - static_cast<double>(d) >= 0.0) ? 255 : 0;
        }
    return gt;
}

std::vector<GroundTruth> render_distance_suite(const StereoRig& rig,
                                               const std::vector<double>& distances_m, int width,
                                               int height, double radius_m) {
    std::vector<GroundTruth> scenes;
    scenes.reserve(distances_m.size());
    for (std::size_t i = 0; i < distances_m.size(); ++i) {
        SceneSpec spec;
        spec.kind = SceneKind::cylinder_on_background;
        spec.width = width;
        spec.height = height;
        spec.rig = rig;
        spec.depth_m = distances_m[i];
        spec.radius_m = radius_m;
        spec.background_depth_m = 4.0;
        spec.texture_seed = 1000 + i;
        scenes.push_back(render(spec));
    }
    return scenes;
}

void write_scene(const GroundTruth& gt, const SceneSpec& spec, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create scene directory: " + dir);
    const std::filesystem::path base(dir);
    save_pgm(gt.left, (base / "left.pgm").string());
    save_pgm(gt.right, (base / "right.pgm").string());
    save_float_image(gt.disparity, (base / "gt_disparity.pfm").string());
    save_float_image(gt.depth, (base / "gt_depth.pfm").string());
    save_pgm(gt.visibility, (base / "visibility.pgm").string());
    save_calibration(spec.rig, (base / "calib.json").string());
    std::vector<BranchMask> masks;
    if (gt.branch_mask) masks.push_back(*gt.branch_mask);
    save_masks(masks, "left.pgm", (base / "masks.json").string());
}

}  // namespace sbv
