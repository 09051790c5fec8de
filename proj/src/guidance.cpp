#include "evt/guidance.hpp"

#include <cmath>
#include <unordered_map>

namespace evt {

namespace {

// Large enough that a masked logit underflows to exactly zero weight after
// max subtraction, small enough to stay finite.
constexpr double kMaskPenalty = 1e9;

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

}  // namespace

Tensor gate_fuse(const Tensor& features, const Tensor& p_global, const GateParams& params) {
    const int l = features.rows();
    const int d_v = features.cols();
    if (p_global.shape().size() != 1)
        throw DimensionError("p_global must be a vector, got " + shape_string(p_global.shape()));
    const int d_p = p_global.shape()[0];
    if (params.w_g.shape() != std::vector<int>{d_v, d_v + d_p})
        throw DimensionError("gate w_g must be [" + std::to_string(d_v) + "x" +
                             std::to_string(d_v + d_p) + "], got " +
                             shape_string(params.w_g.shape()));
    if (params.b_g.shape() != std::vector<int>{d_v})
        throw DimensionError("gate b_g must be [" + std::to_string(d_v) + "]");
    if (params.w_p.shape() != std::vector<int>{d_v, d_p})
        throw DimensionError("gate w_p must be [" + std::to_string(d_v) + "x" +
                             std::to_string(d_p) + "]");

    Tensor global_rows = broadcast_row(p_global, l);
    Tensor gate_in = concat_cols(features, global_rows);
    Tensor g = sigmoid(add_row_bias(matmul(gate_in, transpose(params.w_g)), params.b_g));
    Tensor projected = matmul(global_rows, transpose(params.w_p));
    Tensor ones = Tensor::full({l, d_v}, 1.0);
    return add(mul(g, features), mul(sub(ones, g), projected));
}

Tensor refine(const Tensor& features, const std::vector<Tensor>& subs,
              const CrossAttnParams& params) {
    if (subs.empty()) throw ContractError("refine requires at least one sub-event embedding");
    Tensor sub_matrix = stack_rows(subs);
    const int d_p = sub_matrix.cols();

    Tensor q = matmul(features, transpose(params.w_q));        // [L × d_p]
    Tensor k = matmul(sub_matrix, transpose(params.w_k));      // [M × d_p]
    Tensor v = matmul(sub_matrix, transpose(params.w_v));      // [M × d_v]
    Tensor weights = softmax_rows(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(d_p)));
    return add(features, matmul(weights, v));
}

Tensor graph_attention_round(const Tensor& node_embeddings, const EventGraph& graph,
                             const CalibParams& params) {
    const int n = node_embeddings.rows();
    if (n != static_cast<int>(graph.nodes.size()))
        throw DimensionError("node embedding rows must match graph node count");
    const int d_p = node_embeddings.cols();

    std::unordered_map<int, int> row_of;
    for (int i = 0; i < n; ++i) row_of[graph.nodes[i].node_id] = i;

    // Additive mask: 0 on {self, in-neighbours, out-neighbours}, -penalty else.
    Tensor mask = Tensor::full({n, n}, -kMaskPenalty);
    auto m = mask.mutable_data();
    for (int i = 0; i < n; ++i) m[i * n + i] = 0.0;
    for (const auto& e : graph.edges) {
        const int s = row_of.at(e.src), d = row_of.at(e.dst);
        m[s * n + d] = 0.0;
        m[d * n + s] = 0.0;
    }

    Tensor q = matmul(node_embeddings, transpose(params.node_wq));
    Tensor k = matmul(node_embeddings, transpose(params.node_wk));
    Tensor v = matmul(node_embeddings, transpose(params.node_wv));
    Tensor logits = add(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(d_p)), mask);
    return add(node_embeddings, matmul(softmax_rows(logits), v));
}

Tensor calibrate(const Tensor& features, const EventGraph& graph,
                 const std::vector<Span>& token_spans, const CalibParams& params) {
    validate_graph(graph);
    const int l = features.rows();
    if (static_cast<int>(token_spans.size()) != l)
        throw DimensionError("calibrate requires one span per token");
    if (params.rounds < 1) throw ConfigError("calibrate rounds must be >= 1");

    std::vector<Tensor> rows;
    rows.reserve(graph.nodes.size());
    for (const auto& node : graph.nodes) rows.push_back(node.embedding);
    Tensor nodes = stack_rows(rows);
    for (int r = 0; r < params.rounds; ++r)
        nodes = graph_attention_round(nodes, graph, params);

    const int n = nodes.rows();
    const int d_p = nodes.cols();

    // Temporal bias: tokens prefer nodes whose anchors are temporally close.
    Tensor bias = Tensor::zeros({l, n});
    auto b = bias.mutable_data();
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < n; ++j)
            b[i * n + j] = -params.gamma * gap_seconds(token_spans[i], graph.nodes[j].anchor);

    Tensor q = matmul(features, transpose(params.token_wq));  // [L × d_p]
    Tensor k = matmul(nodes, transpose(params.token_wk));     // [N × d_p]
    Tensor v = matmul(nodes, transpose(params.token_wv));     // [N × d_v]
    Tensor logits = add(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(d_p)), bias);
    return add(features, matmul(softmax_rows(logits), v));
}

}  // namespace evt
