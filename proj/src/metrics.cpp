#include "sbv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace sbv {

void Box::validate() const {
    if (!(u_min < u_max) || !(v_min < v_max))
        throw ParamError("box must have u_min < u_max and v_min < v_max");
}

RmseResult rmse(const std::vector<double>& actual, const std::vector<double>& predicted) {
    if (actual.size() != predicted.size()) throw DimensionError("rmse input lengths differ");
    if (actual.empty()) throw DimensionError("rmse inputs are empty");
    RmseResult r;
    double acc = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!std::isfinite(actual[i]) || !std::isfinite(predicted[i])) {
            ++r.skipped;
            continue;
        }
        const double diff = actual[i] - predicted[i];
        acc += diff * diff;
        ++r.used;
    }
    if (r.used == 0) throw NoDataError("rmse: every pair had an invalid side");
    r.value = std::sqrt(acc / static_cast<double>(r.used));
    return r;
}

double iou_box(const Box& a, const Box& b) {
    a.validate();
    b.validate();
    const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
    const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

double iou_mask(const std::vector<PixelCoord>& a, const std::vector<PixelCoord>& b, int width,
                int height) {
    BranchMask ma{"a", a}, mb{"b", b};
    const auto pa = rasterize_mask_pixels(ma, width, height);
    const auto pb = rasterize_mask_pixels(mb, width, height);
    if (pa.empty() && pb.empty()) return 0.0;
    auto key = [width](const PixelIndex& p) {
        return static_cast<long long>(p.v) * width + p.u;
    };
    std::size_t inter = 0, ia = 0, ib = 0;
    while (ia < pa.size() && ib < pb.size()) {
        const long long ka = key(pa[ia]), kb = key(pb[ib]);
        if (ka == kb) {
            ++inter;
            ++ia;
            ++ib;
        } else if (ka < kb) {
            ++ia;
        } else {
            ++ib;
        }
    }
    const std::size_t uni = pa.size() + pb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

EvalReport map_50_95(const std::vector<Detection>& preds, const std::vector<TruthRecord>& truths,
                     EvalMode mode, int width, int height) {
    if (truths.empty()) throw NoDataError("mAP is undefined without ground truths");
    if (mode == EvalMode::mask && (width < 1 || height < 1))
        throw ParamError("mask-mode evaluation needs a positive raster size");

    // Confidence ranking; stable sort keeps input order on ties.
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return preds[a].confidence > preds[b].confidence;
    });

    // IoU matrix, shared by all thresholds.
    std::vector<std::vector<double>> iou(preds.size(), std::vector<double>(truths.size(), 0.0));
    if (mode == EvalMode::box) {
        for (std::size_t p = 0; p < preds.size(); ++p)
            for (std::size_t g = 0; g < truths.size(); ++g)
                iou[p][g] = iou_box(preds[p].box, truths[g].box);
    } else {
        for (std::size_t p = 0; p < preds.size(); ++p) {
            if (preds[p].mask_polygon.empty())
                throw ParamError("prediction lacks a mask polygon in mask mode");
            for (std::size_t g = 0; g < truths.size(); ++g) {
                if (truths[g].mask_polygon.empty())
                    throw ParamError("ground truth lacks a mask polygon in mask mode");
                iou[p][g] = iou_mask(preds[p].mask_polygon, truths[g].mask_polygon, width, height);
            }
        }
    }

    EvalReport report;
    double ap_sum = 0.0;
    for (int ti = 0; ti < 10; ++ti) {
        const double t = 0.50 + 0.05 * ti;
        report.thresholds[static_cast<std::size_t>(ti)] = t;

        std::vector<char> gt_used(truths.size(), 0);
        std::vector<char> is_tp(preds.size(), 0);
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            const std::size_t p = order[rank];
            double best = 0.0;
            std::ptrdiff_t best_g = -1;
            for (std::size_t g = 0; g < truths.size(); ++g) {
                if (gt_used[g]) continue;
                if (iou[p][g] > best) {
                    best = iou[p][g];
                    best_g = static_cast<std::ptrdiff_t>(g);
                }
            }
            if (best_g >= 0 && best >= t) {
                gt_used[static_cast<std::size_t>(best_g)] = 1;
                is_tp[rank] = 1;
            }
        }

        // Precision-recall points at each rank prefix, then 101-point AP.
        std::vector<double> precision(order.size()), recall(order.size());
        std::size_t tp = 0;
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            tp += is_tp[rank] ? 1 : 0;
            precision[rank] = static_cast<double>(tp) / static_cast<double>(rank + 1);
            recall[rank] = static_cast<double>(tp) / static_cast<double>(truths.size());
        }
        double ap = 0.0;
        for (int ri = 0; ri <= 100; ++ri) {
            const double r = ri / 100.0;
            double p_best = 0.0;
            for (std::size_t rank = 0; rank < order.size(); ++rank)
                if (recall[rank] >= r) p_best = std::max(p_best, precision[rank]);
            ap += p_best;
        }
        ap /= 101.0;
        report.ap[static_cast<std::size_t>(ti)] = ap;
        ap_sum += ap;
    }
    report.map_50_95 = ap_sum / 10.0;
    return report;
}

namespace {

Box parse_box(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4)
        throw ParseError("box in " + path + " must be [u_min, v_min, u_max, v_max]");
    Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    b.validate();
    return b;
}

std::vector<PixelCoord> parse_polygon(const nlohmann::json& j, const std::string& path) {
    std::vector<PixelCoord> poly;
    for (const auto& jp : j) {
        if (!jp.is_array() || jp.size() != 2)
            throw ParseError("mask point in " + path + " is not a [u, v] pair");
        poly.push_back({jp[0].get<double>(), jp[1].get<double>()});
    }
    return poly;
}

nlohmann::json load_record_array(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad JSON in " + path + ": " + e.what());
    }
    if (!j.is_array()) throw ParseError(path + " must hold a JSON array of records");
    return j;
}

}  // namespace

std::vector<Detection> load_detections(const std::string& path) {
    std::vector<Detection> out;
    for (const auto& jr : load_record_array(path)) {
        Detection d;
        d.label = jr.value("label", std::string("branch"));
        if (!jr.contains("confidence") || !jr["confidence"].is_number())
            throw ParseError("prediction record in " + path + " lacks a numeric 'confidence'");
        d.confidence = jr["confidence"].get<double>();
        if (!jr.contains("box")) throw ParseError("record in " + path + " lacks a 'box'");
        d.box = parse_box(jr["box"], path);
        if (jr.contains("mask")) d.mask_polygon = parse_polygon(jr["mask"], path);
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<TruthRecord> load_truths(const std::string& path) {
    std::vector<TruthRecord> out;
    for (const auto& jr : load_record_array(path)) {
        TruthRecord t;
        t.label = jr.value("label", std::string("branch"));
        if (!jr.contains("box")) throw ParseError("record in " + path + " lacks a 'box'");
        t.box = parse_box(jr["box"], path);
        if (jr.contains("mask")) t.mask_polygon = parse_polygon(jr["mask"], path);
        out.push_back(std::move(t));
    }
    return out;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["n"] = report.n;
    j["thresholds"] = report.thresholds;
    j["ap"] = report.ap;
    j["map_50_95"] = report.map_50_95;
    return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream os;
    os << "  IoU t    AP(t)\n";
    os << "  -----    --------\n";
    char line[64];
    for (int i = 0; i < 10; ++i) {
        std::snprintf(line, sizeof(line), "  %4.2f     %.6f\n",
                      report.thresholds[static_cast<std::size_t>(i)],
                      report.ap[static_cast<std::size_t>(i)]);
        os << line;
    }
    std::snprintf(line, sizeof(line), "  mAP50-95 %.6f\n", report.map_50_95);
    os << line;
    return os.str();
}

}  // namespace sbv
