#include "evt/gradcheck_suite.hpp"

#include <cmath>
#include <functional>

#include "evt/grad_check.hpp"
#include "evt/guidance.hpp"
#include "evt/model.hpp"

namespace evt {

namespace {

constexpr int kSeedsPerCase = 20;
constexpr double kEps = 1e-5;
constexpr double kTol = 1e-4;

Tensor uniform_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.mutable_data()) v = rng.uniform(lo, hi);
    return t;
}

// Signed values with |x| in [min_abs, max_abs]; keeps inputs clear of the
// kinks of relu/min/max and of division by zero.
Tensor signed_tensor(std::vector<int> shape, Rng& rng, double min_abs, double max_abs) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.mutable_data()) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        v = sign * rng.uniform(min_abs, max_abs);
    }
    return t;
}

// Reduces an arbitrary op output to a scalar with fixed random coefficients so
// every output coordinate receives a distinct gradient.
Tensor weighted_sum(const Tensor& out, const Tensor& coeffs) {
    return sum_all(mul(out, coeffs));
}

using CaseBuilder = std::function<double(std::uint64_t seed)>;

GradCheckCase run_case(const std::string& name, const CaseBuilder& builder) {
    GradCheckCase result;
    result.name = name;
    result.seeds = kSeedsPerCase;
    result.tolerance = kTol;
    for (int s = 0; s < kSeedsPerCase; ++s)
        result.max_rel_err = std::max(result.max_rel_err,
                                      builder(static_cast<std::uint64_t>(s) * 7919 + 17));
    result.pass = result.max_rel_err < result.tolerance;
    return result;
}

// ---- tensor op cases -------------------------------------------------------

std::vector<GradCheckCase> tensor_cases() {
    std::vector<GradCheckCase> cases;
    auto push = [&](const std::string& name, const CaseBuilder& b) {
        cases.push_back(run_case(name, b));
    };

    push("matmul", [](std::uint64_t seed) {
        Rng rng(seed);
        const int m = 2 + static_cast<int>(rng.uniform_index(3));
        const int k = 2 + static_cast<int>(rng.uniform_index(3));
        const int n = 2 + static_cast<int>(rng.uniform_index(3));
        Tensor a = uniform_tensor({m, k}, rng), b = uniform_tensor({k, n}, rng);
        Tensor r = uniform_tensor({m, n}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(matmul(in[0], in[1]), r); },
            {a, b}, kEps);
    });
    push("transpose", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({3, 4}, rng);
        Tensor r = uniform_tensor({4, 3}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(transpose(in[0]), r); },
            {x}, kEps);
    });
    push("add", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor a = uniform_tensor({3, 3}, rng), b = uniform_tensor({3, 3}, rng);
        Tensor r = uniform_tensor({3, 3}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(add(in[0], in[1]), r); },
            {a, b}, kEps);
    });
    push("sub", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor a = uniform_tensor({3, 3}, rng), b = uniform_tensor({3, 3}, rng);
        Tensor r = uniform_tensor({3, 3}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(sub(in[0], in[1]), r); },
            {a, b}, kEps);
    });
    push("mul", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor a = uniform_tensor({3, 3}, rng), b = uniform_tensor({3, 3}, rng);
        Tensor r = uniform_tensor({3, 3}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(mul(in[0], in[1]), r); },
            {a, b}, kEps);
    });
    push("div", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor a = uniform_tensor({3, 3}, rng);
        Tensor b = signed_tensor({3, 3}, rng, 0.5, 1.5);
        Tensor r = uniform_tensor({3, 3}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(div(in[0], in[1]), r); },
            {a, b}, kEps);
    });
    push("scale", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({2, 5}, rng);
        const double c = rng.uniform(-2.0, 2.0);
        Tensor r = uniform_tensor({2, 5}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(scale(in[0], c), r); }, {x},
            kEps);
    });
    push("add_row_bias", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({4, 3}, rng), b = uniform_tensor({3}, rng);
        Tensor r = uniform_tensor({4, 3}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                return weighted_sum(add_row_bias(in[0], in[1]), r);
            },
            {x, b}, kEps);
    });
    push("broadcast_row", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor v = uniform_tensor({4}, rng);
        Tensor r = uniform_tensor({3, 4}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(broadcast_row(in[0], 3), r); },
            {v}, kEps);
    });
    push("concat_cols", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor a = uniform_tensor({3, 2}, rng), b = uniform_tensor({3, 4}, rng);
        Tensor r = uniform_tensor({3, 6}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                return weighted_sum(concat_cols(in[0], in[1]), r);
            },
            {a, b}, kEps);
    });
    push("slice_cols", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({3, 5}, rng);
        const int start = static_cast<int>(rng.uniform_index(3));
        const int len = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(5 - start)));
        Tensor r = uniform_tensor({3, len}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                return weighted_sum(slice_cols(in[0], start, len), r);
            },
            {x}, kEps);
    });
    push("gather_rows", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({4, 3}, rng);
        std::vector<int> idx;
        for (int i = 0; i < 5; ++i) idx.push_back(static_cast<int>(rng.uniform_index(4)));
        Tensor r = uniform_tensor({5, 3}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                return weighted_sum(gather_rows(in[0], idx), r);
            },
            {x}, kEps);
    });
    push("select_per_row", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({4, 3}, rng);
        std::vector<int> idx;
        for (int i = 0; i < 4; ++i) idx.push_back(static_cast<int>(rng.uniform_index(3)));
        Tensor r = uniform_tensor({4}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                return weighted_sum(select_per_row(in[0], idx), r);
            },
            {x}, kEps);
    });
    push("relu", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = signed_tensor({3, 4}, rng, 0.05, 1.0);
        Tensor r = uniform_tensor({3, 4}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(relu(in[0]), r); }, {x},
            kEps);
    });
    push("sigmoid", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({3, 4}, rng, -3.0, 3.0);
        Tensor r = uniform_tensor({3, 4}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(sigmoid(in[0]), r); }, {x},
            kEps);
    });
    push("softplus", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({3, 4}, rng, -3.0, 3.0);
        Tensor r = uniform_tensor({3, 4}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(softplus(in[0]), r); }, {x},
            kEps);
    });
    push("softmax_rows", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({3, 5}, rng, -2.0, 2.0);
        Tensor r = uniform_tensor({3, 5}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(softmax_rows(in[0]), r); },
            {x}, kEps);
    });
    push("log_softmax_rows", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({3, 5}, rng, -2.0, 2.0);
        Tensor r = uniform_tensor({3, 5}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                return weighted_sum(log_softmax_rows(in[0]), r);
            },
            {x}, kEps);
    });
    push("l2_normalize_rows", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = signed_tensor({3, 4}, rng, 0.25, 1.0);
        Tensor r = uniform_tensor({3, 4}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                return weighted_sum(l2_normalize_rows(in[0]), r);
            },
            {x}, kEps);
    });
    push("layer_norm_rows", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({3, 6}, rng);
        Tensor gain = uniform_tensor({6}, rng, 0.5, 1.5);
        Tensor bias = uniform_tensor({6}, rng);
        Tensor r = uniform_tensor({3, 6}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                return weighted_sum(layer_norm_rows(in[0], in[1], in[2]), r);
            },
            {x, gain, bias}, kEps);
    });
    push("sum_all", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({3, 4}, rng);
        return grad_check([&](const std::vector<Tensor>& in) { return sum_all(in[0]); }, {x},
                          kEps);
    });
    push("mean_all", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = uniform_tensor({3, 4}, rng);
        return grad_check([&](const std::vector<Tensor>& in) { return mean_all(in[0]); }, {x},
                          kEps);
    });
    push("minimum", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor a = uniform_tensor({3, 4}, rng);
        Tensor b = add(a, signed_tensor({3, 4}, rng, 0.05, 1.0));
        Tensor r = uniform_tensor({3, 4}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(minimum(in[0], in[1]), r); },
            {a, b}, kEps);
    });
    push("maximum", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor a = uniform_tensor({3, 4}, rng);
        Tensor b = add(a, signed_tensor({3, 4}, rng, 0.05, 1.0));
        Tensor r = uniform_tensor({3, 4}, rng);
        return grad_check(
            [&](const std::vector<Tensor>& in) { return weighted_sum(maximum(in[0], in[1]), r); },
            {a, b}, kEps);
    });
    return cases;
}

// ---- module-level cases ----------------------------------------------------

std::vector<Tensor> param_tensors(const ParamSet& params) {
    std::vector<Tensor> out;
    for (const auto& [name, t] : params.entries()) out.push_back(t);
    return out;
}

GradCheckCase encoder_case() {
    return run_case("encoder.encode", [](std::uint64_t seed) {
        Rng rng(seed);
        EncoderConfig cfg;
        cfg.depth = 1;
        cfg.heads = 2;
        cfg.d_v = 8;
        cfg.d_ff = 12;
        cfg.seed = seed;
        const int l = 3;
        VideoFeatures vf;
        vf.tokens = uniform_tensor({l, cfg.d_v}, rng);
        for (int i = 0; i < l; ++i) vf.spans.push_back({static_cast<double>(i), i + 1.0});
        ParamSet params = init_params(cfg);
        Tensor r = uniform_tensor({l, cfg.d_v}, rng);
        std::vector<Tensor> inputs{vf.tokens};
        for (const auto& t : param_tensors(params)) inputs.push_back(t);
        return grad_check(
            [&](const std::vector<Tensor>&) {
                return weighted_sum(encode(vf, cfg, params).tokens, r);
            },
            inputs, kEps);
    });
}

GradCheckCase gate_case() {
    return run_case("guidance.gate_fuse", [](std::uint64_t seed) {
        Rng rng(seed);
        const int l = 3, d_v = 5, d_p = 4;
        Tensor f = uniform_tensor({l, d_v}, rng);
        Tensor p = uniform_tensor({d_p}, rng);
        GateParams params{uniform_tensor({d_v, d_v + d_p}, rng), uniform_tensor({d_v}, rng),
                          uniform_tensor({d_v, d_p}, rng)};
        Tensor r = uniform_tensor({l, d_v}, rng);
        return grad_check(
            [&](const std::vector<Tensor>&) {
                return weighted_sum(gate_fuse(f, p, params), r);
            },
            {f, p, params.w_g, params.b_g, params.w_p}, kEps);
    });
}

GradCheckCase refine_case() {
    return run_case("guidance.refine", [](std::uint64_t seed) {
        Rng rng(seed);
        const int l = 3, d_v = 5, d_p = 4;
        Tensor f = uniform_tensor({l, d_v}, rng);
        const int m = 2 + static_cast<int>(rng.uniform_index(3));
        std::vector<Tensor> subs;
        for (int j = 0; j < m; ++j) subs.push_back(uniform_tensor({d_p}, rng));
        CrossAttnParams params{uniform_tensor({d_p, d_v}, rng), uniform_tensor({d_p, d_p}, rng),
                               uniform_tensor({d_v, d_p}, rng)};
        Tensor r = uniform_tensor({l, d_v}, rng);
        return grad_check(
            [&](const std::vector<Tensor>&) {
                return weighted_sum(refine(f, subs, params), r);
            },
            {f, params.w_q, params.w_k, params.w_v}, kEps);
    });
}

// Two to three events with distinct classes. Identical node embeddings would
// leave the graph-attention query/key weights without gradient (softmax over
// equal keys), so the classes are forced apart.
EventScript random_script(Rng& rng, int classes) {
    EventScript script;
    script.video_duration_sec = 20.0;
    const int events = 2 + static_cast<int>(rng.uniform_index(2));
    double cursor = 0.5;
    for (int e = 0; e < events; ++e) {
        const double len = rng.uniform(2.0, 4.0);
        const double start = cursor + rng.uniform(0.0, 1.5);
        if (start + len > script.video_duration_sec) break;
        const int cls = 1 + (e % classes);
        script.events.push_back({cls, start, start + len});
        cursor = start + len + 0.5;
    }
    script.global_label = script.events.front().class_id;
    return script;
}

GradCheckCase calibrate_case() {
    return run_case("guidance.calibrate", [](std::uint64_t seed) {
        Rng rng(seed);
        const int l = 3, d_v = 5, d_p = 4;
        const EventScript script = random_script(rng, 3);
        const PromptBundle bundle = build_bundle(script, {4.0, 2.0}, d_p, seed, 3);
        Tensor f = uniform_tensor({l, d_v}, rng);
        std::vector<Span> spans;
        for (int i = 0; i < l; ++i)
            spans.push_back({script.video_duration_sec * i / l,
                             script.video_duration_sec * (i + 1) / l});
        CalibParams params{uniform_tensor({d_p, d_p}, rng), uniform_tensor({d_p, d_p}, rng),
                           uniform_tensor({d_p, d_p}, rng), uniform_tensor({d_p, d_v}, rng),
                           uniform_tensor({d_p, d_p}, rng), uniform_tensor({d_v, d_p}, rng),
                           1.0, 1};
        Tensor r = uniform_tensor({l, d_v}, rng);
        return grad_check(
            [&](const std::vector<Tensor>&) {
                return weighted_sum(calibrate(f, bundle.graph, spans, params), r);
            },
            {f, params.node_wq, params.node_wk, params.node_wv, params.token_wq, params.token_wk,
             params.token_wv},
            kEps);
    });
}

std::vector<GradCheckCase> loss_cases() {
    std::vector<GradCheckCase> cases;
    auto push = [&](const std::string& name, const CaseBuilder& b) {
        cases.push_back(run_case(name, b));
    };

    push("losses.loss_cls", [](std::uint64_t seed) {
        Rng rng(seed);
        const int l = 4, classes = 4;
        Tensor logits = uniform_tensor({l, classes}, rng, -2.0, 2.0);
        std::vector<int> targets;
        for (int i = 0; i < l; ++i)
            targets.push_back(static_cast<int>(rng.uniform_index(classes)));
        return grad_check(
            [&](const std::vector<Tensor>& in) { return loss_cls(in[0], targets); }, {logits},
            kEps);
    });
    push("losses.loss_reg", [](std::uint64_t seed) {
        Rng rng(seed);
        const int l = 4;
        Tensor offsets = uniform_tensor({l, 2}, rng, 0.3, 2.0);
        std::vector<double> centers;
        for (int i = 0; i < l; ++i) centers.push_back(2.0 * i + 1.0);
        Tensor center_col = Tensor::from_data({l, 1}, std::move(centers));
        std::vector<RegTarget> matched;
        for (int i = 0; i < l; ++i) {
            if (i > 0 && rng.uniform() < 0.4) continue;
            const double gs = 2.0 * i + rng.uniform(-0.8, 0.4);
            matched.push_back({i, {gs, gs + rng.uniform(0.7, 2.3)}});
        }
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                Tensor starts = sub(center_col, slice_cols(in[0], 0, 1));
                Tensor ends = add(center_col, slice_cols(in[0], 1, 1));
                return loss_reg(starts, ends, matched);
            },
            {offsets}, kEps);
    });
    push("losses.loss_sem", [](std::uint64_t seed) {
        Rng rng(seed);
        const int l = 4, d_p = 5, k = 3;
        Tensor tokens = signed_tensor({l, d_p}, rng, 0.25, 1.0);
        std::vector<Tensor> subs;
        for (int j = 0; j < k; ++j) subs.push_back(signed_tensor({d_p}, rng, 0.25, 1.0));
        std::vector<int> positives;
        for (int i = 0; i < l; ++i) positives.push_back(static_cast<int>(rng.uniform_index(k)));
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                return loss_sem(in[0], subs, positives, 0.4);
            },
            {tokens}, kEps);
    });
    push("losses.loss_cal", [](std::uint64_t seed) {
        Rng rng(seed);
        const int l = 4;
        Tensor offsets = uniform_tensor({l, 2}, rng, 0.3, 2.0);
        std::vector<double> centers;
        for (int i = 0; i < l; ++i) centers.push_back(2.0 * i + 1.0);
        Tensor center_col = Tensor::from_data({l, 1}, std::move(centers));
        std::vector<CalMatch> matches;
        for (int i = 0; i < l; i += 2) {
            const double as = 2.0 * i + rng.uniform(-0.5, 0.5);
            matches.push_back({i, {as, as + rng.uniform(0.8, 2.0)}});
        }
        const bool split = rng.uniform() < 0.5;
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                Tensor starts = sub(center_col, slice_cols(in[0], 0, 1));
                Tensor ends = add(center_col, slice_cols(in[0], 1, 1));
                return loss_cal(starts, ends, matches, split);
            },
            {offsets}, kEps);
    });
    push("losses.total_loss", [](std::uint64_t seed) {
        Rng rng(seed);
        LossWeights w;
        w.lambda_reg = rng.uniform(0.0, 2.0);
        w.lambda_sem = rng.uniform(0.0, 2.0);
        w.lambda_cal = rng.uniform(0.0, 2.0);
        std::vector<Tensor> parts;
        for (int i = 0; i < 4; ++i) parts.push_back(Tensor::scalar(rng.uniform(-1.0, 3.0)));
        return grad_check(
            [&](const std::vector<Tensor>& in) {
                return total_loss({in[0], in[1], in[2], in[3]}, w);
            },
            parts, kEps);
    });
    return cases;
}

// Full four-term objective on a tiny synthetic video, differentiated through
// every parameter and the input tokens.
GradCheckCase pipeline_case() {
    return run_case("pipeline.full_loss_2_tokens", [](std::uint64_t seed) {
        Rng rng(seed);
        ModelConfig cfg;
        cfg.encoder.depth = 1;
        cfg.encoder.heads = 2;
        cfg.encoder.d_v = 8;
        cfg.encoder.d_ff = 12;
        cfg.encoder.seed = seed;
        cfg.guidance = {true, true, true, true, 1.0, 1};
        cfg.num_classes = 3;
        cfg.d_p = 6;
        cfg.loss = LossWeights{};

        DatasetVideo video;
        video.script.video_id = "gc";
        video.script.video_duration_sec = 8.0;
        // The event ends before the last clip starts so one clip stays
        // background; distinct sub-event embeddings keep every attention
        // parameter on a live gradient path.
        video.script.events = {{1 + static_cast<int>(rng.uniform_index(3)), 0.5,
                                3.0 + rng.uniform(0.0, 0.5)}};
        video.script.global_label = video.script.events[0].class_id;
        video.bundle = build_bundle(video.script, {4.0, 2.0}, cfg.d_p, seed, cfg.num_classes);
        video.features.tokens = uniform_tensor({2, cfg.encoder.d_v}, rng);
        video.features.spans = {{0.0, 4.0}, {4.0, 8.0}};
        video.features.video_id = "gc";

        ParamSet params = build_params(cfg, seed ^ 0xAB12);

        std::vector<int> remap;
        std::vector<Tensor> all;
        for (const auto& s : video.bundle.subs) all.push_back(s.embedding);
        const std::vector<Tensor> candidates = dedup_embeddings(all, remap);
        const TokenTargets targets =
            make_targets(video.features.spans, video.script, video.bundle);
        std::vector<int> positives;
        for (int clip : targets.sem_positive) positives.push_back(remap[clip]);

        const DecodeThresholds thresholds{0.0, 0.5, {0.5}};

        std::vector<Tensor> inputs{video.features.tokens};
        for (const auto& t : param_tensors(params)) inputs.push_back(t);
        // Wider probe step for the deep composite: coordinates behind nearly
        // saturated attention have gradients around 1e-9, where the rounding
        // noise of central differences at 1e-5 would swamp the comparison.
        return grad_check(
            [&](const std::vector<Tensor>&) {
                return compute_video_loss(video, cfg, params, thresholds, candidates, positives)
                    .total;
            },
            inputs, 1e-4);
    });
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck(const std::string& module) {
    std::vector<GradCheckCase> cases;
    const bool all = module == "all";
    if (all || module == "tensor") {
        auto t = tensor_cases();
        cases.insert(cases.end(), t.begin(), t.end());
    }
    if (all || module == "encoder") cases.push_back(encoder_case());
    if (all || module == "gate") cases.push_back(gate_case());
    if (all || module == "refine") cases.push_back(refine_case());
    if (all || module == "calibrate") cases.push_back(calibrate_case());
    if (all || module == "losses") {
        auto t = loss_cases();
        cases.insert(cases.end(), t.begin(), t.end());
    }
    if (all || module == "pipeline") cases.push_back(pipeline_case());
    if (cases.empty())
        throw ConfigError("unknown gradcheck module \"" + module +
                          "\" (expected all|tensor|encoder|gate|refine|calibrate|losses|pipeline)");
    return cases;
}

bool gradcheck_all_passed(const std::vector<GradCheckCase>& cases) {
    for (const auto& c : cases)
        if (!c.pass) return false;
    return true;
}

}  // namespace evt
