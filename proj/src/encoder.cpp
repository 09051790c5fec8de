#include "evt/encoder.hpp"

#include <cmath>

namespace evt {

void validate_video_features(const VideoFeatures& vf) {
    if (!vf.tokens.defined() || vf.tokens.shape().size() != 2)
        throw ContractError("video features require a 2-D token tensor");
    const int l = vf.tokens.rows();
    if (l < 1) throw ContractError("video must contain at least one token");
    if (static_cast<int>(vf.spans.size()) != l)
        throw ContractError("token count " + std::to_string(l) + " does not match span count " +
                            std::to_string(vf.spans.size()));
    for (int i = 0; i < l; ++i) {
        require_span(vf.spans[i], "video span");
        if (i > 0 && vf.spans[i].start_sec < vf.spans[i - 1].end_sec)
            throw ContractError("video spans must be sorted and non-overlapping");
    }
}

void validate_encoder_config(const EncoderConfig& cfg) {
    if (cfg.depth < 1) throw ConfigError("encoder depth must be >= 1");
    if (cfg.heads < 1) throw ConfigError("encoder heads must be >= 1");
    if (cfg.d_v < 1 || cfg.d_ff < 1) throw ConfigError("encoder widths must be >= 1");
    if (cfg.d_v % cfg.heads != 0)
        throw ConfigError("d_v (" + std::to_string(cfg.d_v) + ") must be divisible by heads (" +
                          std::to_string(cfg.heads) + ")");
}

void append_encoder_params(ParamSet& params, const EncoderConfig& cfg, Rng& rng) {
    validate_encoder_config(cfg);
    const int d = cfg.d_v;
    for (int layer = 0; layer < cfg.depth; ++layer) {
        const std::string p = "encoder.layer" + std::to_string(layer) + ".";
        params.add(p + "ln1.gain", Tensor::full({d}, 1.0));
        params.add(p + "ln1.bias", Tensor::zeros({d}));
        params.add(p + "attn.wq", init_weight(d, d, rng));
        params.add(p + "attn.bq", Tensor::zeros({d}));
        params.add(p + "attn.wk", init_weight(d, d, rng));
        params.add(p + "attn.wv", init_weight(d, d, rng));
        params.add(p + "attn.bv", Tensor::zeros({d}));
        params.add(p + "attn.wo", init_weight(d, d, rng));
        params.add(p + "attn.bo", Tensor::zeros({d}));
        params.add(p + "ln2.gain", Tensor::full({d}, 1.0));
        params.add(p + "ln2.bias", Tensor::zeros({d}));
        params.add(p + "ffn.w1", init_weight(cfg.d_ff, d, rng));
        params.add(p + "ffn.b1", Tensor::zeros({cfg.d_ff}));
        params.add(p + "ffn.w2", init_weight(d, cfg.d_ff, rng));
        params.add(p + "ffn.b2", Tensor::zeros({d}));
    }
}

ParamSet init_params(const EncoderConfig& cfg) {
    ParamSet params;
    Rng rng(cfg.seed);
    append_encoder_params(params, cfg, rng);
    return params;
}

Tensor position_encoding(int length, int d) {
    Tensor pe = Tensor::zeros({length, d});
    auto out = pe.mutable_data();
    for (int pos = 0; pos < length; ++pos) {
        for (int j = 0; j < d; j += 2) {
            const double rate = std::pow(10000.0, static_cast<double>(j) / d);
            out[pos * d + j] = std::sin(pos / rate);
            if (j + 1 < d) out[pos * d + j + 1] = std::cos(pos / rate);
        }
    }
    return pe;
}

namespace {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_row_bias(matmul(x, transpose(w)), b);
}

Tensor multi_head_self_attention(const Tensor& x, const ParamSet& params,
                                 const std::string& prefix, int heads) {
    const int d = x.cols();
    const int d_head = d / heads;
    Tensor q = linear(x, params.get(prefix + "wq"), params.get(prefix + "bq"));
    // No key bias: a per-row constant shift of the logits is softmax-invariant,
    // so such a parameter would never receive gradient.
    Tensor k = matmul(x, transpose(params.get(prefix + "wk")));
    Tensor v = linear(x, params.get(prefix + "wv"), params.get(prefix + "bv"));
    Tensor merged;
    for (int h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(q, h * d_head, d_head);
        Tensor kh = slice_cols(k, h * d_head, d_head);
        Tensor vh = slice_cols(v, h * d_head, d_head);
        Tensor scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(d_head));
        Tensor attended = matmul(softmax_rows(scores), vh);
        merged = h == 0 ? attended : concat_cols(merged, attended);
    }
    return linear(merged, params.get(prefix + "wo"), params.get(prefix + "bo"));
}

}  // namespace

VideoFeatures encode(const VideoFeatures& input, const EncoderConfig& cfg,
                     const ParamSet& params) {
    validate_video_features(input);
    validate_encoder_config(cfg);
    if (input.tokens.cols() != cfg.d_v)
        throw ConfigError("input token width " + std::to_string(input.tokens.cols()) +
                          " does not match configured d_v " + std::to_string(cfg.d_v));

    const int l = input.tokens.rows();
    Tensor x = input.tokens;
    if (cfg.positions) x = add(x, position_encoding(l, cfg.d_v));

    for (int layer = 0; layer < cfg.depth; ++layer) {
        const std::string p = "encoder.layer" + std::to_string(layer) + ".";
        Tensor h = layer_norm_rows(x, params.get(p + "ln1.gain"), params.get(p + "ln1.bias"));
        x = add(x, multi_head_self_attention(h, params, p + "attn.", cfg.heads));
        Tensor h2 = layer_norm_rows(x, params.get(p + "ln2.gain"), params.get(p + "ln2.bias"));
        Tensor ff = linear(relu(linear(h2, params.get(p + "ffn.w1"), params.get(p + "ffn.b1"))),
                           params.get(p + "ffn.w2"), params.get(p + "ffn.b2"));
        x = add(x, ff);
    }
    return VideoFeatures{x, input.spans, input.video_id};
}

}  // namespace evt
