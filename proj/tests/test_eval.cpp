#include <doctest.h>

#include <cmath>

#include "evt/eval.hpp"
#include "oracles.hpp"

using namespace evt;

namespace {

LocalizedInstance inst(const std::string& vid, int cls, double s, double e, double score) {
    return {vid, {cls, s, e, score}};
}

oracle::Inst to_oracle(const LocalizedInstance& x) {
    return {x.video_id, x.instance.class_id, x.instance.start_sec, x.instance.end_sec,
            x.instance.score};
}

// Random prediction/ground-truth pools: <= 4 GTs and <= 6 predictions per
// class, across a couple of videos.
void random_instances(Rng& rng, std::vector<LocalizedInstance>& preds,
                      std::vector<LocalizedInstance>& gts) {
    preds.clear();
    gts.clear();
    const int classes = 1 + static_cast<int>(rng.uniform_index(3));
    const int videos = 1 + static_cast<int>(rng.uniform_index(2));
    for (int c = 1; c <= classes; ++c) {
        const int n_gt = static_cast<int>(rng.uniform_index(5));      // 0..4
        const int n_pred = static_cast<int>(rng.uniform_index(7));    // 0..6
        for (int g = 0; g < n_gt; ++g) {
            const std::string vid = "v" + std::to_string(rng.uniform_index(videos));
            const double s = rng.uniform(0.0, 20.0);
            gts.push_back(inst(vid, c, s, s + rng.uniform(0.5, 5.0), 1.0));
        }
        for (int p = 0; p < n_pred; ++p) {
            const std::string vid = "v" + std::to_string(rng.uniform_index(videos));
            const double s = rng.uniform(0.0, 20.0);
            preds.push_back(inst(vid, c, s, s + rng.uniform(0.5, 5.0), rng.uniform(0.0, 1.0)));
        }
    }
}

}  // namespace

TEST_CASE("t_iou hand values") {
    CHECK(t_iou({1.0, 3.0}, {1.0, 3.0}) == 1.0);
    CHECK(t_iou({0.0, 1.0}, {5.0, 6.0}) == 0.0);
    CHECK(t_iou({0.0, 2.0}, {1.0, 3.0}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK_THROWS_AS(t_iou({2.0, 2.0}, {0.0, 1.0}), ContractError);
}

TEST_CASE("average_precision basic cases") {
    SUBCASE("one matching prediction") {
        const std::vector<LocalizedInstance> gts{inst("v0", 1, 0.0, 4.0, 1.0)};
        const std::vector<LocalizedInstance> preds{inst("v0", 1, 0.5, 4.0, 0.8)};
        CHECK(t_iou({0.5, 4.0}, {0.0, 4.0}) > 0.5);
        CHECK(average_precision(preds, gts, 0.5) == 1.0);
    }
    SUBCASE("one non-overlapping prediction") {
        const std::vector<LocalizedInstance> gts{inst("v0", 1, 0.0, 2.0, 1.0)};
        const std::vector<LocalizedInstance> preds{inst("v0", 1, 5.0, 7.0, 0.8)};
        CHECK(average_precision(preds, gts, 0.5) == 0.0);
    }
    SUBCASE("hit, miss, hit gives 5/6") {
        const std::vector<LocalizedInstance> gts{inst("v0", 1, 0.0, 2.0, 1.0),
                                                 inst("v0", 1, 10.0, 12.0, 1.0)};
        const std::vector<LocalizedInstance> preds{
            inst("v0", 1, 0.1, 2.0, 0.9),    // hit
            inst("v0", 1, 5.0, 6.0, 0.8),    // miss
            inst("v0", 1, 10.0, 11.9, 0.7),  // hit
        };
        // Brute-force PR oracle first: the frozen expectation is 5/6.
        std::vector<oracle::Inst> opreds, ogts;
        for (const auto& p : preds) opreds.push_back(to_oracle(p));
        for (const auto& g : gts) ogts.push_back(to_oracle(g));
        const double from_oracle = oracle::average_precision(opreds, ogts, 0.5);
        CHECK(from_oracle == doctest::Approx(5.0 / 6).epsilon(1e-15));
        CHECK(average_precision(preds, gts, 0.5) ==
              doctest::Approx(5.0 / 6).epsilon(1e-12));
    }
}

TEST_CASE("evaluate trivial cases") {
    const std::vector<double> grid = activitynet_thresholds();
    REQUIRE(grid.size() == 10);
    CHECK(grid.front() == 0.5);
    CHECK(grid.back() == doctest::Approx(0.95).epsilon(1e-12));

    std::vector<LocalizedInstance> gts{inst("v0", 1, 0.0, 2.0, 1.0),
                                       inst("v0", 2, 3.0, 6.0, 1.0),
                                       inst("v1", 1, 1.0, 4.0, 1.0)};
    SUBCASE("perfect predictions") {
        std::vector<LocalizedInstance> preds = gts;
        for (auto& p : preds) p.instance.score = 0.9;
        const EvalReport report = evaluate(preds, gts, grid);
        CHECK(report.map_defined);
        for (const auto& [t, v] : report.per_threshold_map) CHECK(v == 1.0);
        CHECK(report.average_map == 1.0);
        CHECK(report.prediction_count == 3);
        CHECK(report.ground_truth_count == 3);
    }
    SUBCASE("no predictions") {
        const EvalReport report = evaluate({}, gts, grid);
        CHECK(report.map_defined);
        CHECK(report.average_map == 0.0);
    }
    SUBCASE("no ground truth is flagged undefined") {
        const EvalReport report = evaluate({inst("v0", 1, 0.0, 1.0, 0.5)}, {}, grid);
        CHECK_FALSE(report.map_defined);
        CHECK(report.ground_truth_count == 0);
        const nlohmann::json j = report_to_json(report);
        CHECK(j.at("average_map").is_null());
        CHECK(j.at("counts").at("ground_truths").get<int>() == 0);
    }
    SUBCASE("report keys") {
        const EvalReport report = evaluate(gts, gts, {0.5});
        const nlohmann::json j = report_to_json(report);
        REQUIRE(j.contains("per_threshold_map"));
        REQUIRE(j.contains("average_map"));
        REQUIRE(j.contains("per_class_ap"));
        REQUIRE(j.contains("counts"));
        CHECK(j.size() == 4);
        CHECK(j.at("per_threshold_map").at("0.50").get<double>() == 1.0);
    }
}

TEST_CASE("evaluate matches the brute-force oracle on 200+ random sets") {
    Rng rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 220; ++trial) {
        std::vector<LocalizedInstance> preds, gts;
        random_instances(rng, preds, gts);
        if (gts.empty()) continue;

        std::vector<oracle::Inst> opreds, ogts;
        for (const auto& p : preds) opreds.push_back(to_oracle(p));
        for (const auto& g : gts) ogts.push_back(to_oracle(g));

        for (double thresh : {0.3, 0.5, 0.7}) {
            const EvalReport report = evaluate(preds, gts, {thresh});
            const double expected = oracle::mean_ap(opreds, ogts, thresh);
            CHECK(std::abs(report.per_threshold_map.at(thresh) - expected) <= 1e-9);
        }
        ++checked;
    }
    CHECK(checked >= 200);
}

TEST_CASE("mAP is non-increasing in the tIoU threshold") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<LocalizedInstance> preds, gts;
        random_instances(rng, preds, gts);
        if (gts.empty()) continue;
        const EvalReport report = evaluate(preds, gts, activitynet_thresholds());
        double prev = 2.0;
        for (const auto& [t, v] : report.per_threshold_map) {
            CHECK(v <= prev + 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("AP is invariant under strictly monotone score rescaling") {
    Rng rng(123);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<LocalizedInstance> preds, gts;
        random_instances(rng, preds, gts);
        if (gts.empty() || preds.empty()) continue;

        const EvalReport base = evaluate(preds, gts, {0.5});
        std::vector<LocalizedInstance> rescaled = preds;
        for (auto& p : rescaled)
            p.instance.score = 0.05 + 0.9 / (1.0 + std::exp(-3.0 * p.instance.score));
        const EvalReport again = evaluate(rescaled, gts, {0.5});
        CHECK(base.per_threshold_map.at(0.5) ==
              doctest::Approx(again.per_threshold_map.at(0.5)).epsilon(1e-12));
    }
}
