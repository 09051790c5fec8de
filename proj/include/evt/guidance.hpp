#pragma once

#include <vector>

#include "evt/intervals.hpp"
#include "evt/prompt_oracle.hpp"
#include "evt/tensor.hpp"

namespace evt {

// Adaptive gate blending visual tokens with the projected global prompt.
struct GateParams {
    Tensor w_g;  // [d_v × (d_v + d_p)]
    Tensor b_g;  // [d_v]
    Tensor w_p;  // [d_v × d_p]
};

// Cross-modal attention from tokens onto sub-event embeddings.
struct CrossAttnParams {
    Tensor w_q;  // [d_p × d_v]
    Tensor w_k;  // [d_p × d_p]
    Tensor w_v;  // [d_v × d_p]
};

// One masked graph-attention round over event nodes followed by token→node
// cross attention with a temporal bias.
struct CalibParams {
    Tensor node_wq;   // [d_p × d_p]
    Tensor node_wk;   // [d_p × d_p]
    Tensor node_wv;   // [d_p × d_p]
    Tensor token_wq;  // [d_p × d_v]
    Tensor token_wk;  // [d_p × d_p]
    Tensor token_wv;  // [d_v × d_p]
    double gamma = 1.0;  // bias strength per second of gap
    int rounds = 1;      // node-update rounds
};

// Per token i: g_i = sigmoid(W_g [F_i; p_global] + b_g);
// out_i = g_i ⊙ F_i + (1 - g_i) ⊙ (W_p p_global).
Tensor gate_fuse(const Tensor& features, const Tensor& p_global, const GateParams& params);

// Per token i: attends over all sub-event embeddings with 1/sqrt(d_p) scaling
// and adds the attended values back onto the token (residual).
Tensor refine(const Tensor& features, const std::vector<Tensor>& subs,
              const CrossAttnParams& params);

// Step 1 of calibrate, exposed for direct testing: each node attends only over
// itself and its graph neighbours (either direction); residual update.
Tensor graph_attention_round(const Tensor& node_embeddings, const EventGraph& graph,
                             const CalibParams& params);

// Full calibration: updated node embeddings, then token→node attention whose
// logits carry an additive bias of -gamma * gap(token_span, node_anchor);
// residual output preserves [L × d_v].
Tensor calibrate(const Tensor& features, const EventGraph& graph,
                 const std::vector<Span>& token_spans, const CalibParams& params);

}  // namespace evt
