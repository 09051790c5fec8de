#pragma once

#include <vector>

#include "evt/config.hpp"
#include "evt/dataset.hpp"
#include "evt/guidance.hpp"
#include "evt/losses.hpp"

namespace evt {

struct ModelConfig {
    EncoderConfig encoder;
    GuidanceToggles guidance;
    int num_classes = 0;  // background excluded
    int d_p = 0;
    LossWeights loss;
    bool cal_split_deviations = false;
};

ModelConfig model_config_from(const RunConfig& cfg, const SyntheticDataset& data);

// Builds every learnable tensor the configured paths use and nothing else, so
// a guidance-free configuration has exactly the encoder+head parameter set.
ParamSet build_params(const ModelConfig& cfg, std::uint64_t seed);

struct VideoForward {
    Tensor guided;   // [L × d_v] features after the guidance stack
    HeadOutput head;
    Tensor starts;   // [L × 1] unclamped predicted starts, on tape
    Tensor ends;     // [L × 1] unclamped predicted ends, on tape
};

VideoForward forward_video(const VideoFeatures& input, const PromptBundle& bundle,
                           const ModelConfig& cfg, const ParamSet& params);

struct TokenTargets {
    std::vector<int> cls;           // class id per token, 0 = background
    std::vector<RegTarget> reg;     // regression targets for non-background tokens
    std::vector<int> sem_positive;  // index of the max-overlap clip per token
};

// Center-sampling rule: a token takes the class of the event covering its
// center; non-background tokens regress against that event.
TokenTargets make_targets(const std::vector<Span>& spans, const EventScript& script,
                          const PromptBundle& bundle);

struct VideoLoss {
    LossParts parts;
    Tensor total;
};

// Assembles the four-term loss for one video. The contrastive candidates and
// per-token positive indices are supplied by the caller so batches can pool
// their sub-event embeddings.
VideoLoss compute_video_loss(const DatasetVideo& video, const ModelConfig& cfg,
                             const ParamSet& params, const DecodeThresholds& thresholds,
                             const std::vector<Tensor>& sem_candidates,
                             const std::vector<int>& sem_positives);

// Deduplicates bitwise-identical embeddings, keeping first-occurrence order;
// remap[i] gives the candidate index of input embedding i.
std::vector<Tensor> dedup_embeddings(const std::vector<Tensor>& embeddings,
                                     std::vector<int>& remap);

}  // namespace evt
