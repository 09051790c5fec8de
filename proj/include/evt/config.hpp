#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "evt/encoder.hpp"
#include "evt/losses.hpp"

namespace evt {

// Synthetic dataset recipe. Class ids 1..num_classes carry signal; 0 is the
// reserved background. Classes are paired visually: visual_ambiguity = 1 makes
// the two templates of a pair identical, 0 makes every template independent.
struct GenSpec {
    int num_train = 20;
    int num_val = 8;
    int num_classes = 5;
    int d_v = 64;
    int d_p = 32;
    int tokens_per_video = 24;
    double duration_min = 16.0;
    double duration_max = 32.0;
    int events_min = 1;
    int events_max = 4;
    double event_len_min = 3.0;
    double event_len_max = 8.0;
    double noise_sigma = 0.4;
    double visual_ambiguity = 0.5;
    double template_scale = 2.0;
    double clip_len = 4.0;
    double clip_stride = 2.0;
};

void validate_gen_spec(const GenSpec& spec);

// Which guidance paths are active. With advanced_fusion the prompts feed the
// gating / cross-attention / graph-calibration modules; without it the prompt
// embeddings are simply concatenated onto the head input.
struct GuidanceToggles {
    bool gep = false;
    bool tsep = false;
    bool calibrate = false;
    bool advanced_fusion = false;
    double gamma = 1.0;
    int calib_rounds = 1;
};

struct OptimizerConfig {
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.01;
    int warmup_steps = 50;
    int total_steps = 500;
    int batch_size = 4;
};

struct DecodeThresholds {
    double score_thresh = 0.3;
    double nms_iou = 0.5;
    // The 0.5:0.05:0.95 grid; swap in {0.5} for single-threshold scoring.
    std::vector<double> eval_tious{0.5,  0.55, 0.6,  0.65, 0.7,
                                   0.75, 0.8,  0.85, 0.9,  0.95};
};

struct RunConfig {
    std::uint64_t seed = 7;
    EncoderConfig encoder;
    GuidanceToggles guidance;
    LossWeights loss;
    bool cal_split_deviations = false;
    OptimizerConfig optimizer;
    DecodeThresholds thresholds;
    GenSpec dataset;
    int checkpoint_every = 0;  // 0 disables periodic checkpoints
    int log_every = 1;
};

void validate_run_config(const RunConfig& cfg);

// Strict parsers: unknown keys anywhere are a hard error naming the key.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
GenSpec gen_spec_from_json(const nlohmann::json& j);
nlohmann::json gen_spec_to_json(const GenSpec& spec);

RunConfig load_run_config(const std::string& path);
GenSpec load_gen_spec(const std::string& path);

}  // namespace evt
