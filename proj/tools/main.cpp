// stereobranch: stereo branch-distance measurement CLI.
//
// Subcommands: match, fuse, synth, eval, bench. Data goes to files or stdout,
// timings and diagnostics go to stderr. Exit codes: 0 success, 2 bad
// arguments, 3 file I/O or parse failures, 4 pipeline errors.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbv/fusion.hpp"
#include "sbv/geometry.hpp"
#include "sbv/image_io.hpp"
#include "sbv/metrics.hpp"
#include "sbv/synth.hpp"

namespace {

struct StereoJobConfig {
    std::string left_path, right_path, calib_path, out;
    std::string masks_path;       // fuse only
    std::string preview_path;     // fuse only, optional masked-depth PGM
    double sigma = 1.0;
    sbv::SgbmParams sgbm;
    sbv::WlsParams wls;
    bool no_wls = false;
    double bin_width = 0.05;
    int threads = 0;
    double z_min = 0.5, z_max = 4.0;
};

struct SynthConfig {
    std::string kind = "fronto_plane";
    std::string out;
    int width = 640, height = 360;
    std::uint64_t seed = 1;
    double depth = 2.0, background_depth = 4.0, radius = 0.015, axis_y = 0.0;
    double tilt_u = 0.05, tilt_v = 0.0;
    double fx = 600.0, fy = 600.0, ox = -1.0, oy = -1.0, baseline = 0.1;
};

struct EvalConfig {
    std::string preds_path, truths_path;
    std::string mode = "box";
    int width = 0, height = 0;
};

struct BenchConfig {
    int width = 640, height = 360;
    sbv::SgbmParams sgbm;
    double distance = 1.5;
    double budget_ms = 0.0;
    int threads = 0;
};

void add_pipeline_flags(CLI::App* cmd, StereoJobConfig& cfg) {
    cmd->add_option("--sigma", cfg.sigma, "Preprocessing Gaussian sigma in px")
        ->capture_default_str();
    cmd->add_option("--num-disparities", cfg.sgbm.num_disparities,
                    "Disparity search range D (multiple of 8)")
        ->capture_default_str();
    cmd->add_option("--p1", cfg.sgbm.p1, "Small disparity-change penalty P1")
        ->capture_default_str();
    cmd->add_option("--p2", cfg.sgbm.p2, "Large disparity-change penalty P2")
        ->capture_default_str();
    cmd->add_option("--paths", cfg.sgbm.num_paths, "Aggregation path count (4 or 8)")
        ->capture_default_str();
    cmd->add_option("--uniqueness", cfg.sgbm.uniqueness_ratio, "Uniqueness margin in percent")
        ->capture_default_str();
    cmd->add_option("--lr-max-diff", cfg.sgbm.lr_max_diff,
                    "Left-right consistency tolerance in px")
        ->capture_default_str();
    cmd->add_option("--speckle-window", cfg.sgbm.speckle_window,
                    "Minimum surviving region area in px^2")
        ->capture_default_str();
    cmd->add_option("--speckle-range", cfg.sgbm.speckle_range,
                    "Disparity step that still joins a speckle region")
        ->capture_default_str();
    cmd->add_flag("--no-wls", cfg.no_wls, "Skip the WLS refinement stage");
    cmd->add_option("--wls-lambda", cfg.wls.lambda, "WLS smoothness weight lambda")
        ->capture_default_str();
    cmd->add_option("--wls-sigma-color", cfg.wls.sigma_color,
                    "WLS guide-edge sensitivity sigma_color")
        ->capture_default_str();
    cmd->add_option("--wls-iters", cfg.wls.num_iterations, "WLS sweep rounds")
        ->capture_default_str();
    cmd->add_option("--threads", cfg.threads, "Worker threads (0 = auto)")->capture_default_str();
}

sbv::PipelineParams pipeline_params(const StereoJobConfig& cfg) {
    sbv::PipelineParams p;
    p.smooth_sigma = cfg.sigma;
    p.sgbm = cfg.sgbm;
    p.wls = cfg.wls;
    p.use_wls = !cfg.no_wls;
    p.bin_width_m = cfg.bin_width;
    p.threads = cfg.threads;
    return p;
}

void report_timings(const char* cmd, const sbv::PipelineArtifacts& art) {
    std::fprintf(stderr, "[%s] smooth %.1f ms\n", cmd, art.ms_smooth);
    std::fprintf(stderr, "[%s] sgbm   %.1f ms\n", cmd, art.ms_match);
    std::fprintf(stderr, "[%s] wls    %.1f ms\n", cmd, art.ms_refine);
    std::fprintf(stderr, "[%s] depth  %.1f ms\n", cmd, art.ms_depth);
}

int run_match(const StereoJobConfig& cfg) {
    const sbv::StereoRig rig = sbv::load_calibration(cfg.calib_path);
    const sbv::GrayImage left = sbv::load_image(cfg.left_path);
    const sbv::GrayImage right = sbv::load_image(cfg.right_path);

    const sbv::PipelineArtifacts art = sbv::match_pipeline(left, right, rig, pipeline_params(cfg));
    report_timings("match", art);

    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    const std::filesystem::path out(cfg.out);
    sbv::save_float_image(art.disparity, (out / "disparity.pfm").string());
    sbv::save_float_image(art.depth, (out / "depth.pfm").string());
    sbv::save_pgm(sbv::depth_preview(art.depth, cfg.z_min, cfg.z_max),
                  (out / "preview.pgm").string());
    return 0;
}

int run_fuse(const StereoJobConfig& cfg) {
    const sbv::StereoRig rig = sbv::load_calibration(cfg.calib_path);
    const std::vector<sbv::BranchMask> masks = sbv::load_masks(cfg.masks_path);
    if (masks.empty()) {
        sbv::save_estimates({}, cfg.out);
        std::fprintf(stderr, "[fuse] no masks, wrote empty list\n");
        return 0;
    }
    const sbv::GrayImage left = sbv::load_image(cfg.left_path);
    const sbv::GrayImage right = sbv::load_image(cfg.right_path);

    const auto t0 = std::chrono::steady_clock::now();
    const sbv::PipelineArtifacts art = sbv::match_pipeline(left, right, rig, pipeline_params(cfg));
    std::vector<sbv::DistanceEstimate> estimates;
    try {
        for (const sbv::BranchMask& mask : masks)
            estimates.push_back(sbv::estimate_distance(mask, art.depth, cfg.bin_width));
    } catch (const sbv::PipelineError&) {
        throw;
    } catch (const sbv::Error& e) {
        throw sbv::PipelineError("fusion", e.what());
    }
    const double total_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    report_timings("fuse", art);
    std::fprintf(stderr, "[fuse] total  %.1f ms\n", total_ms);

    sbv::save_estimates(estimates, cfg.out);
    if (!cfg.preview_path.empty()) {
        sbv::DepthMap masked(art.depth.width, art.depth.height, sbv::invalid_value());
        for (const sbv::BranchMask& mask : masks)
            for (const sbv::PixelIndex& p :
                 sbv::rasterize_mask_pixels(mask, art.depth.width, art.depth.height))
                masked.at(p.u, p.v) = art.depth.at(p.u, p.v);
        sbv::save_pgm(sbv::depth_preview(masked, cfg.z_min, cfg.z_max), cfg.preview_path);
    }
    return 0;
}

int run_synth(const SynthConfig& cfg) {
    sbv::SceneSpec spec;
    if (cfg.kind == "fronto_plane")
        spec.kind = sbv::SceneKind::fronto_plane;
    else if (cfg.kind == "slanted_plane")
        spec.kind = sbv::SceneKind::slanted_plane;
    else if (cfg.kind == "cylinder")
        spec.kind = sbv::SceneKind::cylinder_on_background;
    else
        throw sbv::ParamError("unknown scene kind: " + cfg.kind);

    spec.width = cfg.width;
    spec.height = cfg.height;
    spec.texture_seed = cfg.seed;
    spec.depth_m = cfg.depth;
    spec.background_depth_m = cfg.background_depth;
    spec.radius_m = cfg.radius;
    spec.axis_y_m = cfg.axis_y;
    spec.tilt_u = cfg.tilt_u;
    spec.tilt_v = cfg.tilt_v;
    const double ox = cfg.ox >= 0.0 ? cfg.ox : cfg.width / 2.0;
    const double oy = cfg.oy >= 0.0 ? cfg.oy : cfg.height / 2.0;
    spec.rig = sbv::StereoRig(sbv::CameraIntrinsics(cfg.fx, cfg.fy, ox, oy), cfg.baseline);

    const sbv::GroundTruth gt = sbv::render(spec);
    sbv::write_scene(gt, spec, cfg.out);
    std::fprintf(stderr, "[synth] wrote scene to %s\n", cfg.out.c_str());
    return 0;
}

int run_eval(const EvalConfig& cfg) {
    const auto preds = sbv::load_detections(cfg.preds_path);
    const auto truths = sbv::load_truths(cfg.truths_path);
    const sbv::EvalMode mode = cfg.mode == "mask" ? sbv::EvalMode::mask : sbv::EvalMode::box;
    const sbv::EvalReport report = sbv::map_50_95(preds, truths, mode, cfg.width, cfg.height);
    std::cout << sbv::report_to_json(report);
    std::cerr << sbv::report_to_table(report);
    return 0;
}

int run_bench(const BenchConfig& cfg) {
    const sbv::StereoRig rig(
        sbv::CameraIntrinsics(600.0, 600.0, cfg.width / 2.0, cfg.height / 2.0), 0.1);
    const auto scenes = sbv::render_distance_suite(rig, {cfg.distance}, cfg.width, cfg.height);
    const sbv::GroundTruth& gt = scenes.front();
    if (!gt.branch_mask) throw sbv::ParamError("benchmark scene has no visible cylinder");

    sbv::PipelineParams params;
    params.smooth_sigma = 0.0;  // rendered scenes carry no sensor noise
    params.sgbm = cfg.sgbm;
    params.threads = cfg.threads;

    const auto t0 = std::chrono::steady_clock::now();
    const auto estimates = sbv::run_pipeline(gt.left, gt.right, rig, {*gt.branch_mask}, params);
    const double total_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json j;
    j["width"] = cfg.width;
    j["height"] = cfg.height;
    j["num_disparities"] = cfg.sgbm.num_disparities;
    j["paths"] = cfg.sgbm.num_paths;
    j["total_ms"] = total_ms;
    j["distance_m"] = estimates.front().distance_m;
    j["expected_m"] = cfg.distance;
    std::cout << j.dump(2) << "\n";

    if (cfg.budget_ms > 0.0 && total_ms > cfg.budget_ms)
        throw sbv::PipelineError("bench", "exceeded time budget: " + std::to_string(total_ms) +
                                              " ms > " + std::to_string(cfg.budget_ms) + " ms");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stereobranch: branch-to-camera distance from rectified stereo pairs"};
    app.require_subcommand(1);

    StereoJobConfig match_cfg;
    CLI::App* match = app.add_subcommand(
        "match", "Compute disparity and depth maps from a stereo pair");
    match->add_option("left", match_cfg.left_path, "Left image (PGM or PNG)")->required();
    match->add_option("right", match_cfg.right_path, "Right image (PGM or PNG)")->required();
    match->add_option("--calib", match_cfg.calib_path, "Calibration JSON")->required();
    match->add_option("--out", match_cfg.out, "Output directory")->default_val(".");
    match->add_option("--zmin", match_cfg.z_min, "Preview depth range low, m")
        ->capture_default_str();
    match->add_option("--zmax", match_cfg.z_max, "Preview depth range high, m")
        ->capture_default_str();
    add_pipeline_flags(match, match_cfg);

    StereoJobConfig fuse_cfg;
    CLI::App* fuse = app.add_subcommand(
        "fuse", "Measure branch distances from a stereo pair and segmentation masks");
    fuse->add_option("left", fuse_cfg.left_path, "Left image (PGM or PNG)")->required();
    fuse->add_option("right", fuse_cfg.right_path, "Right image (PGM or PNG)")->required();
    fuse->add_option("--calib", fuse_cfg.calib_path, "Calibration JSON")->required();
    fuse->add_option("--masks", fuse_cfg.masks_path, "Branch mask JSON")->required();
    fuse->add_option("--out", fuse_cfg.out, "Output estimates JSON file")
        ->default_val("distances.json");
    fuse->add_option("--bin-width", fuse_cfg.bin_width, "Depth histogram bin width, m")
        ->capture_default_str();
    fuse->add_option("--preview", fuse_cfg.preview_path, "Optional masked-depth PGM path");
    fuse->add_option("--zmin", fuse_cfg.z_min, "Preview depth range low, m")
        ->capture_default_str();
    fuse->add_option("--zmax", fuse_cfg.z_max, "Preview depth range high, m")
        ->capture_default_str();
    add_pipeline_flags(fuse, fuse_cfg);

    SynthConfig synth_cfg;
    CLI::App* synth = app.add_subcommand(
        "synth", "Render a synthetic stereo scene with exact ground truth");
    synth->add_option("--kind", synth_cfg.kind,
                      "Scene kind: fronto_plane, slanted_plane, cylinder")
        ->capture_default_str();
    synth->add_option("--out", synth_cfg.out, "Scene output directory")->required();
    synth->add_option("--width", synth_cfg.width, "Image width")->capture_default_str();
    synth->add_option("--height", synth_cfg.height, "Image height")->capture_default_str();
    synth->add_option("--seed", synth_cfg.seed, "Texture seed")->capture_default_str();
    synth->add_option("--depth", synth_cfg.depth, "Plane depth or cylinder axis depth, m")
        ->capture_default_str();
    synth->add_option("--background-depth", synth_cfg.background_depth,
                      "Background plane depth, m")
        ->capture_default_str();
    synth->add_option("--radius", synth_cfg.radius, "Cylinder radius, m")->capture_default_str();
    synth->add_option("--axis-y", synth_cfg.axis_y, "Cylinder axis height, m")
        ->capture_default_str();
    synth->add_option("--tilt-u", synth_cfg.tilt_u, "Slanted plane disparity slope along u")
        ->capture_default_str();
    synth->add_option("--tilt-v", synth_cfg.tilt_v, "Slanted plane disparity slope along v")
        ->capture_default_str();
    synth->add_option("--fx", synth_cfg.fx, "Focal length x, px")->capture_default_str();
    synth->add_option("--fy", synth_cfg.fy, "Focal length y, px")->capture_default_str();
    synth->add_option("--ox", synth_cfg.ox, "Principal point x (default: width/2)");
    synth->add_option("--oy", synth_cfg.oy, "Principal point y (default: height/2)");
    synth->add_option("--baseline", synth_cfg.baseline, "Stereo baseline, m")
        ->capture_default_str();

    EvalConfig eval_cfg;
    CLI::App* eval = app.add_subcommand("eval", "Score detections against ground truth (mAP50-95)");
    eval->add_option("--preds", eval_cfg.preds_path, "Predictions JSON")->required();
    eval->add_option("--truths", eval_cfg.truths_path, "Ground-truth JSON")->required();
    eval->add_option("--mode", eval_cfg.mode, "box or mask")->capture_default_str();
    eval->add_option("--width", eval_cfg.width, "Raster width for mask mode");
    eval->add_option("--height", eval_cfg.height, "Raster height for mask mode");

    BenchConfig bench_cfg;
    CLI::App* bench =
        app.add_subcommand("bench", "Time the end-to-end pipeline on a synthetic scene");
    bench->add_option("--width", bench_cfg.width, "Image width")->capture_default_str();
    bench->add_option("--height", bench_cfg.height, "Image height")->capture_default_str();
    bench->add_option("--num-disparities", bench_cfg.sgbm.num_disparities, "Disparity range D")
        ->capture_default_str();
    bench->add_option("--paths", bench_cfg.sgbm.num_paths, "Aggregation path count")
        ->capture_default_str();
    bench->add_option("--distance", bench_cfg.distance, "Cylinder distance, m")
        ->capture_default_str();
    bench->add_option("--budget-ms", bench_cfg.budget_ms,
                      "Fail when the end-to-end run exceeds this many ms (0 = off)")
        ->capture_default_str();
    bench->add_option("--threads", bench_cfg.threads, "Worker threads (0 = auto)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*match) return run_match(match_cfg);
        if (*fuse) return run_fuse(fuse_cfg);
        if (*synth) return run_synth(synth_cfg);
        if (*eval) return run_eval(eval_cfg);
        if (*bench) return run_bench(bench_cfg);
    } catch (const sbv::ParamError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const sbv::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const sbv::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const sbv::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 0;
}
