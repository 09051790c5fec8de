#pragma once

#include <vector>

#include "evt/intervals.hpp"
#include "evt/prompt_oracle.hpp"
#include "evt/tensor.hpp"

namespace evt {

// One localized action, predicted or ground truth.
struct ActionInstance {
    int class_id = 0;
    double start_sec = 0.0;
    double end_sec = 0.0;
    double score = 1.0;
};

// Anchor-free per-token head output: class scores over C classes plus
// background, and non-negative distances from the token center to the
// instance start and end.
struct HeadOutput {
    Tensor class_logits;      // [L × (C+1)], column 0 is background
    Tensor boundary_offsets;  // [L × 2], softplus'd so offsets >= 0
};

struct LossWeights {
    double lambda_reg = 1.0;
    double lambda_sem = 0.5;
    double lambda_cal = 0.2;
    double tau = 0.07;
};

void validate_weights(const LossWeights& w);

// Mean over tokens of -log softmax(logits)[target], via log-sum-exp.
Tensor loss_cls(const Tensor& logits, const std::vector<int>& targets);

// 1-D generalized IoU in (-1, 1].
double giou_1d(Span a, Span b);

struct RegTarget {
    int token = 0;
    Span gt;
};

// Mean over matched tokens of (1 - GIoU(predicted, gt)), differentiable
// through the per-token start/end columns. Zero when nothing is matched.
Tensor loss_reg(const Tensor& starts, const Tensor& ends, const std::vector<RegTarget>& matched);

// InfoNCE over a precomputed similarity matrix [L × K]; positives picks one
// column per row; every column participates in the denominator.
Tensor info_nce_from_sims(const Tensor& sims, const std::vector<int>& positives, double tau);

// Contrastive semantic loss: cosine similarities between projected tokens and
// the candidate sub-event embeddings, then InfoNCE at temperature tau.
Tensor loss_sem(const Tensor& proj_tokens, const std::vector<Tensor>& subs,
                const std::vector<int>& positives, double tau);

struct CalMatch {
    int token = 0;
    Span anchor;
};

// Mean over matched graph events of ((s_hat - s) + (e_hat - e))^2, or with
// split_deviations the two boundary deviations are squared separately.
Tensor loss_cal(const Tensor& starts, const Tensor& ends, const std::vector<CalMatch>& matches,
                bool split_deviations = false);

struct LossParts {
    Tensor cls;
    Tensor reg;
    Tensor sem;
    Tensor cal;
};

// L_cls + lambda_reg*L_reg + lambda_sem*L_sem + lambda_cal*L_cal.
Tensor total_loss(const LossParts& parts, const LossWeights& weights);

struct DecodedInstance {
    ActionInstance instance;
    int token = 0;  // token that produced this instance
};

// Per-token argmax over non-background classes, interval from the boundary
// offsets clamped to the video, score threshold, then greedy per-class NMS.
// Result sorted by score descending.
std::vector<DecodedInstance> decode(const HeadOutput& head, const std::vector<Span>& spans,
                                    double score_thresh, double nms_iou);

// Greedy matching of decoded predictions onto sub-event graph nodes of the
// same class; a pair matches when its tIoU strictly exceeds min_tiou.
std::vector<CalMatch> match_to_graph(const std::vector<DecodedInstance>& preds,
                                     const EventGraph& graph, double min_tiou = 0.1);

}  // namespace evt
