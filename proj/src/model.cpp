#include "evt/model.hpp"

#include <cstring>
#include <unordered_map>

namespace evt {

namespace {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_row_bias(matmul(x, transpose(w)), b);
}

GateParams gate_params(const ParamSet& params) {
    return {params.get("gate.w_g"), params.get("gate.b_g"), params.get("gate.w_p")};
}

CrossAttnParams refine_params(const ParamSet& params) {
    return {params.get("refine.w_q"), params.get("refine.w_k"), params.get("refine.w_v")};
}

CalibParams calib_params(const ParamSet& params, const GuidanceToggles& g) {
    CalibParams p{params.get("calib.node_wq"), params.get("calib.node_wk"),
                  params.get("calib.node_wv"), params.get("calib.token_wq"),
                  params.get("calib.token_wk"), params.get("calib.token_wv"),
                  g.gamma, g.calib_rounds};
    return p;
}

// Index of the clip with maximal overlap against the span (ties: earlier clip).
int best_clip(const Span& span, const std::vector<SubPrompt>& subs) {
    int best = 0;
    double best_overlap = -1.0;
    for (std::size_t j = 0; j < subs.size(); ++j) {
        const double o = overlap_length(span, subs[j].clip_span);
        if (o > best_overlap) {
            best_overlap = o;
            best = static_cast<int>(j);
        }
    }
    return best;
}

}  // namespace

ModelConfig model_config_from(const RunConfig& cfg, const SyntheticDataset& data) {
    ModelConfig m;
    m.encoder = cfg.encoder;
    m.guidance = cfg.guidance;
    m.num_classes = data.num_classes;
    m.d_p = data.d_p;
    m.loss = cfg.loss;
    m.cal_split_deviations = cfg.cal_split_deviations;
    if (data.d_v != cfg.encoder.d_v)
        throw ConfigError("dataset feature width " + std::to_string(data.d_v) +
                          " does not match encoder d_v " + std::to_string(cfg.encoder.d_v));
    return m;
}

ParamSet build_params(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.num_classes < 1) throw ConfigError("model needs at least one action class");
    const int d_v = cfg.encoder.d_v;
    const int d_p = cfg.d_p;

    ParamSet params;
    Rng enc_rng(cfg.encoder.seed);
    append_encoder_params(params, cfg.encoder, enc_rng);

    Rng rng(seed);
    const auto& g = cfg.guidance;
    if (g.advanced_fusion && g.gep) {
        params.add("gate.w_g", init_weight(d_v, d_v + d_p, rng));
        params.add("gate.b_g", Tensor::zeros({d_v}));
        params.add("gate.w_p", init_weight(d_v, d_p, rng));
    }
    if (g.advanced_fusion && g.tsep) {
        params.add("refine.w_q", init_weight(d_p, d_v, rng));
        params.add("refine.w_k", init_weight(d_p, d_p, rng));
        params.add("refine.w_v", init_weight(d_v, d_p, rng));
    }
    if (g.advanced_fusion && g.calibrate) {
        params.add("calib.node_wq", init_weight(d_p, d_p, rng));
        params.add("calib.node_wk", init_weight(d_p, d_p, rng));
        params.add("calib.node_wv", init_weight(d_p, d_p, rng));
        params.add("calib.token_wq", init_weight(d_p, d_v, rng));
        params.add("calib.token_wk", init_weight(d_p, d_p, rng));
        params.add("calib.token_wv", init_weight(d_v, d_p, rng));
    }
    if (cfg.loss.lambda_sem > 0.0) params.add("sem.proj", init_weight(d_p, d_v, rng));

    int head_in = d_v;
    if (!g.advanced_fusion && g.gep) head_in += d_p;
    if (!g.advanced_fusion && g.tsep) head_in += d_p;
    params.add("head.w_cls", init_weight(cfg.num_classes + 1, head_in, rng));
    params.add("head.b_cls", Tensor::zeros({cfg.num_classes + 1}));
    params.add("head.w_off", init_weight(2, head_in, rng));
    params.add("head.b_off", Tensor::zeros({2}));
    return params;
}

VideoForward forward_video(const VideoFeatures& input, const PromptBundle& bundle,
                           const ModelConfig& cfg, const ParamSet& params) {
    const VideoFeatures encoded = encode(input, cfg.encoder, params);
    const int l = encoded.tokens.rows();

    Tensor features = encoded.tokens;
    Tensor head_in;
    const auto& g = cfg.guidance;
    if (g.advanced_fusion) {
        if (g.gep) features = gate_fuse(features, bundle.p_global, gate_params(params));
        if (g.tsep) {
            std::vector<Tensor> subs;
            for (const auto& s : bundle.subs) subs.push_back(s.embedding);
            features = refine(features, subs, refine_params(params));
        }
        if (g.calibrate)
            features = calibrate(features, bundle.graph, encoded.spans,
                                 calib_params(params, g));
        head_in = features;
    } else {
        // Simple fusion: prompt embeddings concatenated onto the head input.
        head_in = features;
        if (g.gep) head_in = concat_cols(head_in, broadcast_row(bundle.p_global, l));
        if (g.tsep) {
            std::vector<double> rows;
            rows.reserve(static_cast<std::size_t>(l) * cfg.d_p);
            for (int i = 0; i < l; ++i) {
                const auto& emb = bundle.subs[best_clip(encoded.spans[i], bundle.subs)].embedding;
                rows.insert(rows.end(), emb.data().begin(), emb.data().end());
            }
            head_in = concat_cols(head_in, Tensor::from_data({l, cfg.d_p}, std::move(rows)));
        }
    }

    HeadOutput head;
    head.class_logits = linear(head_in, params.get("head.w_cls"), params.get("head.b_cls"));
    head.boundary_offsets =
        softplus(linear(head_in, params.get("head.w_off"), params.get("head.b_off")));

    std::vector<double> centers(static_cast<std::size_t>(l));
    for (int i = 0; i < l; ++i) centers[i] = span_center(encoded.spans[i]);
    Tensor center_col = Tensor::from_data({l, 1}, std::move(centers));
    Tensor starts = sub(center_col, slice_cols(head.boundary_offsets, 0, 1));
    Tensor ends = add(center_col, slice_cols(head.boundary_offsets, 1, 1));

    return {features, head, starts, ends};
}

TokenTargets make_targets(const std::vector<Span>& spans, const EventScript& script,
                          const PromptBundle& bundle) {
    TokenTargets targets;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const double center = span_center(spans[i]);
        int cls = kBackgroundClass;
        Span covering;
        for (const auto& e : script.events)
            if (center >= e.start_sec && center < e.end_sec) {
                cls = e.class_id;
                covering = {e.start_sec, e.end_sec};
                break;
            }
        targets.cls.push_back(cls);
        if (cls != kBackgroundClass)
            targets.reg.push_back({static_cast<int>(i), covering});
        targets.sem_positive.push_back(best_clip(spans[i], bundle.subs));
    }
    return targets;
}

std::vector<Tensor> dedup_embeddings(const std::vector<Tensor>& embeddings,
                                     std::vector<int>& remap) {
    std::vector<Tensor> unique;
    std::unordered_map<std::string, int> seen;
    remap.clear();
    for (const auto& emb : embeddings) {
        std::string key(reinterpret_cast<const char*>(emb.data().data()),
                        emb.data().size() * sizeof(double));
        auto [it, inserted] = seen.emplace(std::move(key), static_cast<int>(unique.size()));
        if (inserted) unique.push_back(emb);
        remap.push_back(it->second);
    }
    return unique;
}

VideoLoss compute_video_loss(const DatasetVideo& video, const ModelConfig& cfg,
                             const ParamSet& params, const DecodeThresholds& thresholds,
                             const std::vector<Tensor>& sem_candidates,
                             const std::vector<int>& sem_positives) {
    const VideoForward fwd = forward_video(video.features, video.bundle, cfg, params);
    const TokenTargets targets = make_targets(video.features.spans, video.script, video.bundle);

    LossParts parts;
    parts.cls = loss_cls(fwd.head.class_logits, targets.cls);
    parts.reg = cfg.loss.lambda_reg > 0.0 ? loss_reg(fwd.starts, fwd.ends, targets.reg)
                                          : Tensor::scalar(0.0);

    if (cfg.loss.lambda_sem > 0.0 && sem_candidates.size() >= 2) {
        Tensor projected = matmul(fwd.guided, transpose(params.get("sem.proj")));
        parts.sem = loss_sem(projected, sem_candidates, sem_positives, cfg.loss.tau);
    } else {
        parts.sem = Tensor::scalar(0.0);
    }

    if (cfg.loss.lambda_cal > 0.0) {
        const auto decoded = decode(fwd.head, video.features.spans, thresholds.score_thresh,
                                    thresholds.nms_iou);
        const auto matches = match_to_graph(decoded, video.bundle.graph);
        parts.cal = loss_cal(fwd.starts, fwd.ends, matches, cfg.cal_split_deviations);
    } else {
        parts.cal = Tensor::scalar(0.0);
    }

    return {parts, total_loss(parts, cfg.loss)};
}

}  // namespace evt
