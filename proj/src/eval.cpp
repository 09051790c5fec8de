#include "evt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace evt {

double t_iou(Span a, Span b) {
    require_span(a, "t_iou");
    require_span(b, "t_iou");
    const double inter = overlap_length(a, b);
    const double uni = span_length(a) + span_length(b) - inter;
    return inter / uni;
}

double average_precision(std::vector<LocalizedInstance> preds,
                         const std::vector<LocalizedInstance>& gts, double thresh) {
    if (gts.empty()) return 0.0;
    if (preds.empty()) return 0.0;

    std::sort(preds.begin(), preds.end(), [](const LocalizedInstance& a,
                                             const LocalizedInstance& b) {
        if (a.instance.score != b.instance.score) return a.instance.score > b.instance.score;
        if (a.instance.start_sec != b.instance.start_sec)
            return a.instance.start_sec < b.instance.start_sec;
        return a.instance.class_id < b.instance.class_id;
    });

    std::vector<bool> gt_taken(gts.size(), false);
    const std::size_t total_gt = gts.size();
    std::size_t tp = 0;
    // Cumulative precision/recall after each prediction, then the standard
    // running-max envelope integrated over the recall steps.
    std::vector<double> precision(preds.size()), recall(preds.size());
    for (std::size_t p = 0; p < preds.size(); ++p) {
        int best = -1;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (gt_taken[g] || gts[g].video_id != preds[p].video_id) continue;
            const double iou = t_iou({preds[p].instance.start_sec, preds[p].instance.end_sec},
                                     {gts[g].instance.start_sec, gts[g].instance.end_sec});
            if (iou < thresh) continue;
            if (iou > best_iou || (iou == best_iou && best >= 0 &&
                                   gts[g].instance.start_sec < gts[best].instance.start_sec)) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            gt_taken[best] = true;
            ++tp;
        }
        precision[p] = static_cast<double>(tp) / static_cast<double>(p + 1);
        recall[p] = static_cast<double>(tp) / static_cast<double>(total_gt);
    }

    double ap = 0.0;
    double envelope = 0.0;
    for (std::size_t i = preds.size(); i-- > 0;) {
        envelope = std::max(envelope, precision[i]);
        const double r_lo = i == 0 ? 0.0 : recall[i - 1];
        if (recall[i] > r_lo) ap += (recall[i] - r_lo) * envelope;
    }
    return ap;
}

EvalReport evaluate(const std::vector<LocalizedInstance>& preds,
                    const std::vector<LocalizedInstance>& gts,
                    const std::vector<double>& thresholds) {
    if (thresholds.empty()) throw ConfigError("evaluate requires at least one tIoU threshold");
    for (double t : thresholds)
        if (!(t > 0.0 && t <= 1.0))
            throw ConfigError("tIoU thresholds must lie in (0, 1], got " + std::to_string(t));

    EvalReport report;
    report.prediction_count = preds.size();
    report.ground_truth_count = gts.size();

    std::map<int, std::vector<LocalizedInstance>> gt_by_class, pred_by_class;
    for (const auto& g : gts) gt_by_class[g.instance.class_id].push_back(g);
    for (const auto& p : preds) pred_by_class[p.instance.class_id].push_back(p);

    if (gt_by_class.empty()) {
        // No ground truth at all: mAP is undefined, flagged via map_defined.
        report.map_defined = false;
        return report;
    }
    report.map_defined = true;

    for (double thresh : thresholds) {
        double sum = 0.0;
        for (const auto& [cls, class_gts] : gt_by_class) {
            const auto it = pred_by_class.find(cls);
            const double ap = average_precision(
                it == pred_by_class.end() ? std::vector<LocalizedInstance>{} : it->second,
                class_gts, thresh);
            report.per_class_ap[{cls, thresh}] = ap;
            sum += ap;
        }
        report.per_threshold_map[thresh] = sum / static_cast<double>(gt_by_class.size());
    }

    double total = 0.0;
    for (const auto& [t, v] : report.per_threshold_map) total += v;
    report.average_map = total / static_cast<double>(report.per_threshold_map.size());
    return report;
}

namespace {

std::string threshold_key(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", t);
    return buf;
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json per_threshold = nlohmann::json::object();
    for (const auto& [t, v] : report.per_threshold_map) per_threshold[threshold_key(t)] = v;

    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [key, ap] : report.per_class_ap) {
        const auto& [cls, thresh] = key;
        per_class[std::to_string(cls)][threshold_key(thresh)] = ap;
    }

    nlohmann::json j;
    j["per_threshold_map"] = report.map_defined ? per_threshold : nlohmann::json();
    j["average_map"] = report.map_defined ? nlohmann::json(report.average_map) : nlohmann::json();
    j["per_class_ap"] = per_class;
    j["counts"] = {{"predictions", report.prediction_count},
                   {"ground_truths", report.ground_truth_count}};
    return j;
}

std::vector<double> activitynet_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 9; ++i) t.push_back(0.5 + 0.05 * i);
    return t;
}

std::vector<double> thumos_thresholds() { return {0.5}; }

}  // namespace evt
