#include "evt/config.hpp"

#include <set>

#include "evt/common.hpp"

namespace evt {

namespace {

using nlohmann::json;

// Rejects keys outside the allowed set so config typos fail loudly.
void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key \"" + key + "\" in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void validate_gen_spec(const GenSpec& spec) {
    if (spec.num_classes < 1) throw ConfigError("dataset needs at least one class besides background");
    if (spec.num_train < 1) throw ConfigError("dataset needs at least one training video");
    if (spec.num_val < 0) throw ConfigError("num_val must be >= 0");
    if (spec.d_v < 1 || spec.d_p < 1) throw ConfigError("dataset widths must be >= 1");
    if (spec.tokens_per_video < 1) throw ConfigError("tokens_per_video must be >= 1");
    if (!(spec.duration_min > 0.0) || spec.duration_max < spec.duration_min)
        throw ConfigError("invalid duration range");
    if (spec.events_min < 1 || spec.events_max < spec.events_min || spec.events_max > 4)
        throw ConfigError("events per video must satisfy 1 <= min <= max <= 4");
    if (!(spec.event_len_min > 0.0) || spec.event_len_max < spec.event_len_min)
        throw ConfigError("invalid event length range");
    if (spec.noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (spec.visual_ambiguity < 0.0 || spec.visual_ambiguity > 1.0)
        throw ConfigError("visual_ambiguity must lie in [0, 1]");
    if (!(spec.template_scale > 0.0)) throw ConfigError("template_scale must be positive");
    if (!(spec.clip_stride > 0.0) || spec.clip_len < spec.clip_stride)
        throw ConfigError("clip policy requires 0 < stride <= clip_len");
}

void validate_run_config(const RunConfig& cfg) {
    validate_encoder_config(cfg.encoder);
    validate_weights(cfg.loss);
    validate_gen_spec(cfg.dataset);
    if (cfg.optimizer.lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (cfg.optimizer.total_steps < 0 || cfg.optimizer.warmup_steps < 0)
        throw ConfigError("step counts must be >= 0");
    if (cfg.optimizer.warmup_steps > cfg.optimizer.total_steps)
        throw ConfigError("warmup_steps must not exceed total_steps");
    if (cfg.optimizer.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.thresholds.score_thresh < 0.0 || cfg.thresholds.score_thresh > 1.0 ||
        cfg.thresholds.nms_iou < 0.0 || cfg.thresholds.nms_iou > 1.0)
        throw ConfigError("decode thresholds must lie in [0, 1]");
    if (cfg.thresholds.eval_tious.empty())
        throw ConfigError("eval_tious must contain at least one threshold");
    for (double t : cfg.thresholds.eval_tious)
        if (!(t > 0.0 && t <= 1.0)) throw ConfigError("eval tIoU thresholds must lie in (0, 1]");
    if (cfg.guidance.calib_rounds < 1) throw ConfigError("calib_rounds must be >= 1");
    if (cfg.log_every < 1) throw ConfigError("log_every must be >= 1");
    if (cfg.checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

GenSpec gen_spec_from_json(const nlohmann::json& j) {
    check_keys(j, "dataset spec",
               {"num_train", "num_val", "num_classes", "d_v", "d_p", "tokens_per_video",
                "duration_min", "duration_max", "events_min", "events_max", "event_len_min",
                "event_len_max", "noise_sigma", "visual_ambiguity", "template_scale", "clip_len",
                "clip_stride"});
    GenSpec spec;
    read(j, "num_train", spec.num_train);
    read(j, "num_val", spec.num_val);
    read(j, "num_classes", spec.num_classes);
    read(j, "d_v", spec.d_v);
    read(j, "d_p", spec.d_p);
    read(j, "tokens_per_video", spec.tokens_per_video);
    read(j, "duration_min", spec.duration_min);
    read(j, "duration_max", spec.duration_max);
    read(j, "events_min", spec.events_min);
    read(j, "events_max", spec.events_max);
    read(j, "event_len_min", spec.event_len_min);
    read(j, "event_len_max", spec.event_len_max);
    read(j, "noise_sigma", spec.noise_sigma);
    read(j, "visual_ambiguity", spec.visual_ambiguity);
    read(j, "template_scale", spec.template_scale);
    read(j, "clip_len", spec.clip_len);
    read(j, "clip_stride", spec.clip_stride);
    validate_gen_spec(spec);
    return spec;
}

nlohmann::json gen_spec_to_json(const GenSpec& spec) {
    return {{"num_train", spec.num_train},
            {"num_val", spec.num_val},
            {"num_classes", spec.num_classes},
            {"d_v", spec.d_v},
            {"d_p", spec.d_p},
            {"tokens_per_video", spec.tokens_per_video},
            {"duration_min", spec.duration_min},
            {"duration_max", spec.duration_max},
            {"events_min", spec.events_min},
            {"events_max", spec.events_max},
            {"event_len_min", spec.event_len_min},
            {"event_len_max", spec.event_len_max},
            {"noise_sigma", spec.noise_sigma},
            {"visual_ambiguity", spec.visual_ambiguity},
            {"template_scale", spec.template_scale},
            {"clip_len", spec.clip_len},
            {"clip_stride", spec.clip_stride}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    check_keys(j, "run config",
               {"seed", "encoder", "guidance", "loss", "optimizer", "thresholds", "dataset",
                "checkpoint_every", "log_every"});
    RunConfig cfg;
    read(j, "seed", cfg.seed);
    read(j, "checkpoint_every", cfg.checkpoint_every);
    read(j, "log_every", cfg.log_every);

    if (j.contains("encoder")) {
        const auto& e = j.at("encoder");
        check_keys(e, "encoder config", {"depth", "heads", "d_v", "d_ff", "seed", "positions"});
        read(e, "depth", cfg.encoder.depth);
        read(e, "heads", cfg.encoder.heads);
        read(e, "d_v", cfg.encoder.d_v);
        read(e, "d_ff", cfg.encoder.d_ff);
        read(e, "seed", cfg.encoder.seed);
        read(e, "positions", cfg.encoder.positions);
    }
    if (j.contains("guidance")) {
        const auto& g = j.at("guidance");
        check_keys(g, "guidance config",
                   {"gep", "tsep", "calibrate", "advanced_fusion", "gamma", "calib_rounds"});
        read(g, "gep", cfg.guidance.gep);
        read(g, "tsep", cfg.guidance.tsep);
        read(g, "calibrate", cfg.guidance.calibrate);
        read(g, "advanced_fusion", cfg.guidance.advanced_fusion);
        read(g, "gamma", cfg.guidance.gamma);
        read(g, "calib_rounds", cfg.guidance.calib_rounds);
    }
    if (j.contains("loss")) {
        const auto& l = j.at("loss");
        check_keys(l, "loss config",
                   {"lambda_reg", "lambda_sem", "lambda_cal", "tau", "cal_split_deviations"});
        read(l, "lambda_reg", cfg.loss.lambda_reg);
        read(l, "lambda_sem", cfg.loss.lambda_sem);
        read(l, "lambda_cal", cfg.loss.lambda_cal);
        read(l, "tau", cfg.loss.tau);
        read(l, "cal_split_deviations", cfg.cal_split_deviations);
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        check_keys(o, "optimizer config",
                   {"lr", "beta1", "beta2", "weight_decay", "warmup_steps", "total_steps",
                    "batch_size"});
        read(o, "lr", cfg.optimizer.lr);
        read(o, "beta1", cfg.optimizer.beta1);
        read(o, "beta2", cfg.optimizer.beta2);
        read(o, "weight_decay", cfg.optimizer.weight_decay);
        read(o, "warmup_steps", cfg.optimizer.warmup_steps);
        read(o, "total_steps", cfg.optimizer.total_steps);
        read(o, "batch_size", cfg.optimizer.batch_size);
    }
    if (j.contains("thresholds")) {
        const auto& t = j.at("thresholds");
        check_keys(t, "thresholds config", {"score_thresh", "nms_iou", "eval_tious"});
        read(t, "score_thresh", cfg.thresholds.score_thresh);
        read(t, "nms_iou", cfg.thresholds.nms_iou);
        read(t, "eval_tious", cfg.thresholds.eval_tious);
    }
    if (j.contains("dataset")) cfg.dataset = gen_spec_from_json(j.at("dataset"));

    validate_run_config(cfg);
    return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    return {{"seed", cfg.seed},
            {"encoder",
             {{"depth", cfg.encoder.depth},
              {"heads", cfg.encoder.heads},
              {"d_v", cfg.encoder.d_v},
              {"d_ff", cfg.encoder.d_ff},
              {"seed", cfg.encoder.seed},
              {"positions", cfg.encoder.positions}}},
            {"guidance",
             {{"gep", cfg.guidance.gep},
              {"tsep", cfg.guidance.tsep},
              {"calibrate", cfg.guidance.calibrate},
              {"advanced_fusion", cfg.guidance.advanced_fusion},
              {"gamma", cfg.guidance.gamma},
              {"calib_rounds", cfg.guidance.calib_rounds}}},
            {"loss",
             {{"lambda_reg", cfg.loss.lambda_reg},
              {"lambda_sem", cfg.loss.lambda_sem},
              {"lambda_cal", cfg.loss.lambda_cal},
              {"tau", cfg.loss.tau},
              {"cal_split_deviations", cfg.cal_split_deviations}}},
            {"optimizer",
             {{"lr", cfg.optimizer.lr},
              {"beta1", cfg.optimizer.beta1},
              {"beta2", cfg.optimizer.beta2},
              {"weight_decay", cfg.optimizer.weight_decay},
              {"warmup_steps", cfg.optimizer.warmup_steps},
              {"total_steps", cfg.optimizer.total_steps},
              {"batch_size", cfg.optimizer.batch_size}}},
            {"thresholds",
             {{"score_thresh", cfg.thresholds.score_thresh},
              {"nms_iou", cfg.thresholds.nms_iou},
              {"eval_tious", cfg.thresholds.eval_tious}}},
            {"dataset", gen_spec_to_json(cfg.dataset)},
            {"checkpoint_every", cfg.checkpoint_every},
            {"log_every", cfg.log_every}};
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(nlohmann::json::parse(read_file(path)));
}

GenSpec load_gen_spec(const std::string& path) {
    return gen_spec_from_json(nlohmann::json::parse(read_file(path)));
}

}  // namespace evt
