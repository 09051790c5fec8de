#pragma once

// Test-only oracles, written before and kept independent of the library
// implementations they check.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace oracle {

struct Inst {
    std::string video_id;
    int class_id = 0;
    double start = 0.0;
    double end = 0.0;
    double score = 1.0;
};

inline double tiou(double as, double ae, double bs, double be) {
    const double inter = std::max(0.0, std::min(ae, be) - std::max(as, bs));
    const double uni = (ae - as) + (be - bs) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

// Greedy matching in score order: every prediction grabs the unmatched
// ground-truth of its video with the highest tIoU >= thresh (ties: earlier
// ground-truth start, then lower index). Returns one hit flag per prediction
// in sorted order.
inline std::vector<char> match_flags(std::vector<Inst> preds, const std::vector<Inst>& gts,
                                     double thresh) {
    std::sort(preds.begin(), preds.end(), [](const Inst& a, const Inst& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.start != b.start) return a.start < b.start;
        return a.class_id < b.class_id;
    });
    std::vector<char> gt_taken(gts.size(), 0);
    std::vector<char> hit(preds.size(), 0);
    for (std::size_t p = 0; p < preds.size(); ++p) {
        int best = -1;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (gt_taken[g] || gts[g].video_id != preds[p].video_id) continue;
            const double iou = tiou(preds[p].start, preds[p].end, gts[g].start, gts[g].end);
            if (iou < thresh) continue;
            if (iou > best_iou ||
                (iou == best_iou && best >= 0 && gts[g].start < gts[best].start)) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            gt_taken[best] = 1;
            hit[p] = 1;
        }
    }
    return hit;
}

// All-points interpolated AP for a single class, computed by brute force:
// enumerate the precision/recall point after every prediction prefix, then
// integrate the precision envelope over the recall grid k/G, k = 1..G.
inline double average_precision(const std::vector<Inst>& preds, const std::vector<Inst>& gts,
                                double thresh) {
    if (gts.empty()) return 0.0;
    if (preds.empty()) return 0.0;
    const std::vector<char> hit = match_flags(preds, gts, thresh);

    std::vector<double> precision, recall;
    int tp = 0;
    for (std::size_t i = 0; i < hit.size(); ++i) {
        if (hit[i]) ++tp;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
    }

    const std::size_t g = gts.size();
    double ap = 0.0;
    for (std::size_t k = 1; k <= g; ++k) {
        const double r = static_cast<double>(k) / static_cast<double>(g);
        double envelope = 0.0;
        for (std::size_t i = 0; i < precision.size(); ++i)
            if (recall[i] >= r) envelope = std::max(envelope, precision[i]);
        ap += envelope / static_cast<double>(g);
    }
    return ap;
}

// Mean over classes that have ground truth.
inline double mean_ap(const std::vector<Inst>& preds, const std::vector<Inst>& gts,
                      double thresh) {
    std::map<int, std::vector<Inst>> gt_by_class, pred_by_class;
    for (const auto& g : gts) gt_by_class[g.class_id].push_back(g);
    for (const auto& p : preds) pred_by_class[p.class_id].push_back(p);
    if (gt_by_class.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [cls, class_gts] : gt_by_class) {
        const auto it = pred_by_class.find(cls);
        sum += average_precision(it == pred_by_class.end() ? std::vector<Inst>{} : it->second,
                                 class_gts, thresh);
    }
    return sum / static_cast<double>(gt_by_class.size());
}

}  // namespace oracle
