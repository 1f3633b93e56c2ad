#pragma once

#include <array>
#include <string>
#include <vector>

#include "sbv/fusion.hpp"

namespace sbv {

struct Box {
    double u_min = 0.0, v_min = 0.0, u_max = 0.0, v_max = 0.0;
    void validate() const;
    double area() const { return (u_max - u_min) * (v_max - v_min); }
};

/// Prediction record from an external detector/segmenter (single class).
struct Detection {
    std::string label = "branch";
    double confidence = 0.0;
    Box box;
    std::vector<PixelCoord> mask_polygon;  ///< empty when the detector gave no mask
};

/// Ground-truth record: a Detection minus the confidence.
struct TruthRecord {
    std::string label = "branch";
    Box box;
    std::vector<PixelCoord> mask_polygon;
};

struct RmseResult {
    double value = 0.0;
    std::size_t used = 0;     ///< pairs that entered the mean
    std::size_t skipped = 0;  ///< pairs dropped because either side was invalid
};

/// sqrt(mean((actual - predicted)^2)) over pairs where both sides are finite.
RmseResult rmse(const std::vector<double>& actual, const std::vector<double>& predicted);

/// Intersection-over-union of two axis-aligned boxes; disjoint gives 0,
/// identical gives 1.
double iou_box(const Box& a, const Box& b);

/// Pixel IoU of two polygons rasterized at the given size; defined as 0 when
/// both rasterize empty.
double iou_mask(const std::vector<PixelCoord>& a, const std::vector<PixelCoord>& b, int width,
                int height);

enum class EvalMode { box, mask };

struct EvalReport {
    std::array<double, 10> thresholds;  ///< 0.50, 0.55, ..., 0.95
    std::array<double, 10> ap;          ///< AP(t) per threshold
    double map_50_95 = 0.0;             ///< mean of the ten APs
    int n = 10;
};

/// Single-class detection evaluation. Per threshold: predictions sorted by
/// descending confidence (input order breaks ties) are greedily matched to the
/// unmatched truth with highest IoU >= t; AP uses 101-point interpolation of
/// the precision-recall curve. Mask mode rasterizes polygons at width x height.
EvalReport map_50_95(const std::vector<Detection>& preds, const std::vector<TruthRecord>& truths,
                     EvalMode mode, int width = 0, int height = 0);

/// JSON file formats: predictions are a list of
///   {"label", "confidence", "box": [u_min, v_min, u_max, v_max], "mask": [[u,v], ...]}
/// records; ground truths use the same schema without "confidence".
std::vector<Detection> load_detections(const std::string& path);
std::vector<TruthRecord> load_truths(const std::string& path);

std::string report_to_json(const EvalReport& report);

/// Fixed-width human-readable table of AP per threshold plus the mean.
std::string report_to_table(const EvalReport& report);

}  // namespace sbv
