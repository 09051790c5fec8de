#pragma once

#include <string>
#include <vector>

#include "evt/intervals.hpp"
#include "evt/params.hpp"
#include "evt/tensor.hpp"

namespace evt {

// Per-segment token features plus their temporal spans.
struct VideoFeatures {
    Tensor tokens;            // [L × d_v]
    std::vector<Span> spans;  // sorted, non-overlapping, one per token
    std::string video_id;
};

void validate_video_features(const VideoFeatures& vf);

struct EncoderConfig {
    int depth = 2;
    int heads = 2;
    int d_v = 64;
    int d_ff = 128;
    std::uint64_t seed = 0;
    bool positions = true;  // sinusoidal position encoding at entry
};

void validate_encoder_config(const EncoderConfig& cfg);

// Deterministic parameter initialization for the stand-alone encoder.
// Weight matrices are uniform in ±1/sqrt(fan_in); biases zero; norm gains one.
ParamSet init_params(const EncoderConfig& cfg);

// Appends the encoder parameters to an existing set under "encoder." names.
void append_encoder_params(ParamSet& params, const EncoderConfig& cfg, Rng& rng);

// Pre-norm transformer over the input tokens. Keeps L, spans and width; adds
// sinusoidal positions once at entry when enabled.
VideoFeatures encode(const VideoFeatures& input, const EncoderConfig& cfg,
                     const ParamSet& params);

// Sinusoidal position table for L tokens of width d.
Tensor position_encoding(int length, int d);

}  // namespace evt
