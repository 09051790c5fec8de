#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "evt/intervals.hpp"
#include "evt/losses.hpp"

namespace evt {

// Temporal IoU of two valid intervals, in [0, 1].
double t_iou(Span a, Span b);

// A prediction or ground truth tied to its video.
struct LocalizedInstance {
    std::string video_id;
    ActionInstance instance;
};

// All-points interpolated average precision for one class. Predictions are
// sorted internally (score desc, earlier start, smaller class id) and matched
// greedily to the unmatched ground truth of the same video with the highest
// tIoU >= thresh. Empty ground truth yields 0 when predictions exist.
double average_precision(std::vector<LocalizedInstance> preds,
                         const std::vector<LocalizedInstance>& gts, double thresh);

struct EvalReport {
    std::map<double, double> per_threshold_map;
    double average_map = 0.0;
    bool map_defined = false;  // false when there is no ground truth at all
    std::map<std::pair<int, double>, double> per_class_ap;
    std::size_t prediction_count = 0;
    std::size_t ground_truth_count = 0;
};

// mAP per threshold = mean AP over classes with at least one ground truth;
// average_map = mean over thresholds.
EvalReport evaluate(const std::vector<LocalizedInstance>& preds,
                    const std::vector<LocalizedInstance>& gts,
                    const std::vector<double>& thresholds);

nlohmann::json report_to_json(const EvalReport& report);

// Community-standard threshold grids.
std::vector<double> activitynet_thresholds();  // 0.5:0.05:0.95
std::vector<double> thumos_thresholds();       // just 0.5

}  // namespace evt
