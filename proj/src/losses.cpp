#include "evt/losses.hpp"

#include <algorithm>
#include <cmath>

namespace evt {

namespace {

double span_t_iou(const Span& a, const Span& b) {
    const double inter = overlap_length(a, b);
    const double uni = span_length(a) + span_length(b) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
    const int n = rows.front().shape()[0];
    std::vector<double> data;
    data.reserve(rows.size() * static_cast<std::size_t>(n));
    for (const auto& r : rows) {
        if (r.shape().size() != 1 || r.shape()[0] != n)
            throw DimensionError("stacked embeddings must share one width");
        data.insert(data.end(), r.data().begin(), r.data().end());
    }
    return Tensor::from_data({static_cast<int>(rows.size()), n}, std::move(data));
}

Tensor column_const(const std::vector<double>& values) {
    return Tensor::from_data({static_cast<int>(values.size()), 1},
                             std::vector<double>(values));
}

}  // namespace

void validate_weights(const LossWeights& w) {
    if (w.lambda_reg < 0.0 || w.lambda_sem < 0.0 || w.lambda_cal < 0.0)
        throw ConfigError("loss weights must be non-negative");
    if (!(w.tau > 0.0)) throw ConfigError("contrastive temperature tau must be positive");
}

Tensor loss_cls(const Tensor& logits, const std::vector<int>& targets) {
    const int l = logits.rows();
    const int classes = logits.cols();
    if (static_cast<int>(targets.size()) != l)
        throw DimensionError("loss_cls needs one target per token");
    for (int t : targets)
        if (t < 0 || t >= classes)
            throw LabelError("class target " + std::to_string(t) + " outside [0, " +
                             std::to_string(classes - 1) + "]");
    Tensor picked = select_per_row(log_softmax_rows(logits), targets);
    return scale(mean_all(picked), -1.0);
}

double giou_1d(Span a, Span b) {
    require_span(a, "giou_1d");
    require_span(b, "giou_1d");
    const double inter = overlap_length(a, b);
    const double uni = span_length(a) + span_length(b) - inter;
    const double hull = std::max(a.end_sec, b.end_sec) - std::min(a.start_sec, b.start_sec);
    return inter / uni - (hull - uni) / hull;
}

Tensor loss_reg(const Tensor& starts, const Tensor& ends, const std::vector<RegTarget>& matched) {
    if (matched.empty()) return Tensor::scalar(0.0);
    std::vector<int> idx;
    std::vector<double> gt_start, gt_end;
    for (const auto& m : matched) {
        require_span(m.gt, "loss_reg target");
        idx.push_back(m.token);
        gt_start.push_back(m.gt.start_sec);
        gt_end.push_back(m.gt.end_sec);
    }
    Tensor s = gather_rows(starts, idx);
    Tensor e = gather_rows(ends, idx);
    Tensor gs = column_const(gt_start);
    Tensor ge = column_const(gt_end);

    Tensor inter = relu(sub(minimum(e, ge), maximum(s, gs)));
    Tensor uni = sub(add(sub(e, s), sub(ge, gs)), inter);
    Tensor hull = sub(maximum(e, ge), minimum(s, gs));
    Tensor giou = sub(div(inter, uni), div(sub(hull, uni), hull));
    Tensor ones = Tensor::full(giou.shape(), 1.0);
    return mean_all(sub(ones, giou));
}

Tensor info_nce_from_sims(const Tensor& sims, const std::vector<int>& positives, double tau) {
    if (!(tau > 0.0)) throw ConfigError("contrastive temperature tau must be positive");
    const int l = sims.rows();
    const int k = sims.cols();
    if (static_cast<int>(positives.size()) != l)
        throw DimensionError("one positive index per row is required");
    if (k < 2) throw ContractError("contrastive loss needs at least one negative candidate");
    for (int p : positives)
        if (p < 0 || p >= k)
            throw ContractError("positive index " + std::to_string(p) + " outside [0, " +
                                std::to_string(k - 1) + "]");
    Tensor picked = select_per_row(log_softmax_rows(scale(sims, 1.0 / tau)), positives);
    return scale(mean_all(picked), -1.0);
}

Tensor loss_sem(const Tensor& proj_tokens, const std::vector<Tensor>& subs,
                const std::vector<int>& positives, double tau) {
    if (subs.empty()) throw ContractError("loss_sem requires candidate sub-event embeddings");
    Tensor tokens_n = l2_normalize_rows(proj_tokens);
    Tensor subs_n = l2_normalize_rows(stack_rows(subs));
    Tensor sims = matmul(tokens_n, transpose(subs_n));
    return info_nce_from_sims(sims, positives, tau);
}

Tensor loss_cal(const Tensor& starts, const Tensor& ends, const std::vector<CalMatch>& matches,
                bool split_deviations) {
    if (matches.empty()) return Tensor::scalar(0.0);
    std::vector<int> idx;
    std::vector<double> anchor_start, anchor_end;
    for (const auto& m : matches) {
        idx.push_back(m.token);
        anchor_start.push_back(m.anchor.start_sec);
        anchor_end.push_back(m.anchor.end_sec);
    }
    Tensor ds = sub(gather_rows(starts, idx), column_const(anchor_start));
    Tensor de = sub(gather_rows(ends, idx), column_const(anchor_end));
    if (split_deviations) return mean_all(add(mul(ds, ds), mul(de, de)));
    Tensor sum = add(ds, de);
    return mean_all(mul(sum, sum));
}

Tensor total_loss(const LossParts& parts, const LossWeights& weights) {
    validate_weights(weights);
    const struct {
        const char* name;
        const Tensor* part;
    } named[] = {{"loss_cls", &parts.cls},
                 {"loss_reg", &parts.reg},
                 {"loss_sem", &parts.sem},
                 {"loss_cal", &parts.cal}};
    for (const auto& [name, part] : named) {
        if (!part->defined() || part->size() != 1)
            throw ContractError(std::string(name) + " must be a defined scalar");
        if (!std::isfinite(part->value()))
            throw NumericError(std::string(name) + " is not finite: " +
                               std::to_string(part->value()));
    }
    return add(add(add(parts.cls, scale(parts.reg, weights.lambda_reg)),
                   scale(parts.sem, weights.lambda_sem)),
               scale(parts.cal, weights.lambda_cal));
}

std::vector<DecodedInstance> decode(const HeadOutput& head, const std::vector<Span>& spans,
                                    double score_thresh, double nms_iou) {
    if (score_thresh < 0.0 || score_thresh > 1.0 || nms_iou < 0.0 || nms_iou > 1.0)
        throw ConfigError("decode thresholds must lie in [0, 1]");
    const int l = head.class_logits.rows();
    const int classes = head.class_logits.cols();
    if (classes < 2) throw ContractError("decode requires at least one non-background class");
    if (head.boundary_offsets.rows() != l || head.boundary_offsets.cols() != 2)
        throw DimensionError("boundary offsets must be [L x 2]");
    if (static_cast<int>(spans.size()) != l)
        throw DimensionError("decode requires one span per token");

    const double duration = spans.back().end_sec;

    std::vector<DecodedInstance> candidates;
    for (int i = 0; i < l; ++i) {
        // Stable softmax over this token's logits.
        double mx = head.class_logits.at(i, 0);
        for (int c = 1; c < classes; ++c) mx = std::max(mx, head.class_logits.at(i, c));
        double denom = 0.0;
        for (int c = 0; c < classes; ++c) denom += std::exp(head.class_logits.at(i, c) - mx);
        int best = 1;
        double best_prob = std::exp(head.class_logits.at(i, 1) - mx) / denom;
        for (int c = 2; c < classes; ++c) {
            const double p = std::exp(head.class_logits.at(i, c) - mx) / denom;
            if (p > best_prob) {
                best = c;
                best_prob = p;
            }
        }
        if (best_prob < score_thresh) continue;
        const double center = span_center(spans[i]);
        const double s = std::max(0.0, center - head.boundary_offsets.at(i, 0));
        const double e = std::min(duration, center + head.boundary_offsets.at(i, 1));
        if (!(s < e)) continue;
        candidates.push_back({ActionInstance{best, s, e, best_prob}, i});
    }

    std::sort(candidates.begin(), candidates.end(), [](const DecodedInstance& a,
                                                       const DecodedInstance& b) {
        if (a.instance.score != b.instance.score) return a.instance.score > b.instance.score;
        if (a.instance.start_sec != b.instance.start_sec)
            return a.instance.start_sec < b.instance.start_sec;
        if (a.instance.class_id != b.instance.class_id)
            return a.instance.class_id < b.instance.class_id;
        return a.token < b.token;
    });

    std::vector<DecodedInstance> kept;
    for (const auto& cand : candidates) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (k.instance.class_id != cand.instance.class_id) continue;
            const double iou = span_t_iou({k.instance.start_sec, k.instance.end_sec},
                                          {cand.instance.start_sec, cand.instance.end_sec});
            if (iou >= nms_iou) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(cand);
    }
    return kept;
}

std::vector<CalMatch> match_to_graph(const std::vector<DecodedInstance>& preds,
                                     const EventGraph& graph, double min_tiou) {
    std::vector<DecodedInstance> ordered = preds;
    std::sort(ordered.begin(), ordered.end(), [](const DecodedInstance& a,
                                                 const DecodedInstance& b) {
        if (a.instance.score != b.instance.score) return a.instance.score > b.instance.score;
        if (a.instance.start_sec != b.instance.start_sec)
            return a.instance.start_sec < b.instance.start_sec;
        return a.token < b.token;
    });

    std::vector<bool> taken(graph.nodes.size(), false);
    std::vector<CalMatch> matches;
    for (const auto& pred : ordered) {
        int best_idx = -1;
        double best_iou = min_tiou;  // must strictly exceed this
        for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
            const auto& node = graph.nodes[n];
            if (node.node_id == graph.global_node_id) continue;  // whole-video node
            if (taken[n] || node.class_id != pred.instance.class_id) continue;
            const double iou = span_t_iou(node.anchor, {pred.instance.start_sec,
                                                        pred.instance.end_sec});
            if (iou > best_iou ||
                (best_idx >= 0 && iou == best_iou &&
                 node.anchor.start_sec < graph.nodes[best_idx].anchor.start_sec)) {
                best_iou = iou;
                best_idx = static_cast<int>(n);
            }
        }
        if (best_idx >= 0) {
            taken[best_idx] = true;
            matches.push_back({pred.token, graph.nodes[best_idx].anchor});
        }
    }
    return matches;
}

}  // namespace evt
