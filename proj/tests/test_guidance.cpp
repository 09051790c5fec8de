#include <doctest.h>

#include <cmath>

#include "evt/grad_check.hpp"
#include "evt/guidance.hpp"

using namespace evt;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.mutable_data()) v = rng.uniform(lo, hi);
    return t;
}

Tensor basis(int d, int axis) {
    Tensor t = Tensor::zeros({d});
    t.mutable_data()[axis] = 1.0;
    return t;
}

EventGraph two_node_graph(int d_p) {
    // Global node anchored near the token, one sub-event 100 s away.
    EventGraph g;
    g.global_node_id = 0;
    g.nodes = {{0, 1, {0.0, 1.0}, basis(d_p, 0)}, {1, 2, {101.0, 102.0}, basis(d_p, 1)}};
    g.edges = {{1, 0, Relation::PartOf}};
    return g;
}

}  // namespace

TEST_CASE("gate_fuse limits") {
    Rng rng(4);
    const int l = 3, d_v = 4, d_p = 3;
    Tensor f = random_tensor({l, d_v}, rng);
    Tensor p = random_tensor({d_p}, rng);
    GateParams params{Tensor::zeros({d_v, d_v + d_p}), Tensor::zeros({d_v}),
                      random_tensor({d_v, d_p}, rng)};

    SUBCASE("open gate keeps the features") {
        params.b_g = Tensor::full({d_v}, 30.0);
        Tensor out = gate_fuse(f, p, params);
        double worst = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i)
            worst = std::max(worst, std::abs(out.data()[i] - f.data()[i]) /
                                        std::max(std::abs(f.data()[i]), 1e-3));
        CHECK(worst < 1e-9);
    }
    SUBCASE("closed gate row-broadcasts the projected prompt") {
        params.b_g = Tensor::full({d_v}, -30.0);
        Tensor out = gate_fuse(f, p, params);
        std::vector<double> projected(static_cast<std::size_t>(d_v), 0.0);
        for (int i = 0; i < d_v; ++i)
            for (int j = 0; j < d_p; ++j) projected[i] += params.w_p.at(i, j) * p.at(j);
        double worst = 0.0;
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < d_v; ++j)
                worst = std::max(worst, std::abs(out.at(i, j) - projected[j]) /
                                            std::max(std::abs(projected[j]), 1e-3));
        CHECK(worst < 1e-9);
    }
    SUBCASE("zero logits blend both halves exactly") {
        Tensor out = gate_fuse(f, p, params);
        std::vector<double> projected(static_cast<std::size_t>(d_v), 0.0);
        for (int i = 0; i < d_v; ++i)
            for (int j = 0; j < d_p; ++j) projected[i] += params.w_p.at(i, j) * p.at(j);
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < d_v; ++j)
                CHECK(out.at(i, j) == 0.5 * f.at(i, j) + 0.5 * projected[j]);
    }
    SUBCASE("gate values are strictly inside (0,1)") {
        GateParams rnd{random_tensor({d_v, d_v + d_p}, rng), random_tensor({d_v}, rng),
                       random_tensor({d_v, d_p}, rng)};
        Tensor out = gate_fuse(f, p, rnd);
        CHECK(out.rows() == l);
        CHECK(out.cols() == d_v);
    }
    SUBCASE("shape mismatch") {
        GateParams bad{Tensor::zeros({d_v, d_v}), Tensor::zeros({d_v}),
                       Tensor::zeros({d_v, d_p})};
        CHECK_THROWS_AS(gate_fuse(f, p, bad), DimensionError);
    }
}

TEST_CASE("refine residual behaviour") {
    Rng rng(14);
    const int l = 4, d_v = 5, d_p = 3;
    Tensor f = random_tensor({l, d_v}, rng);
    CrossAttnParams params{random_tensor({d_p, d_v}, rng), random_tensor({d_p, d_p}, rng),
                           random_tensor({d_v, d_p}, rng)};

    SUBCASE("zero value projection returns the features exactly") {
        params.w_v = Tensor::zeros({d_v, d_p});
        std::vector<Tensor> subs{random_tensor({d_p}, rng), random_tensor({d_p}, rng)};
        Tensor out = refine(f, subs, params);
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == f.data()[i]);
    }
    SUBCASE("single sub-event gets attention weight one") {
        Tensor p = random_tensor({d_p}, rng);
        Tensor out = refine(f, {p}, params);
        std::vector<double> value(static_cast<std::size_t>(d_v), 0.0);
        for (int i = 0; i < d_v; ++i)
            for (int j = 0; j < d_p; ++j) value[i] += params.w_v.at(i, j) * p.at(j);
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < d_v; ++j)
                CHECK(out.at(i, j) == doctest::Approx(f.at(i, j) + value[j]).epsilon(1e-12));
    }
    SUBCASE("identical sub-events make the queries irrelevant") {
        Tensor p = random_tensor({d_p}, rng);
        std::vector<Tensor> subs{p, p, p};
        Tensor out_a = refine(f, subs, params);
        params.w_q = random_tensor({d_p, d_v}, rng);
        params.w_k = random_tensor({d_p, d_p}, rng);
        Tensor out_b = refine(f, subs, params);
        for (std::size_t i = 0; i < out_a.size(); ++i)
            CHECK(out_a.data()[i] == doctest::Approx(out_b.data()[i]).epsilon(1e-12));
    }
    SUBCASE("order of sub-events does not matter") {
        std::vector<Tensor> subs{random_tensor({d_p}, rng), random_tensor({d_p}, rng),
                                 random_tensor({d_p}, rng)};
        Tensor out_a = refine(f, subs, params);
        std::vector<Tensor> shuffled{subs[2], subs[0], subs[1]};
        Tensor out_b = refine(f, shuffled, params);
        for (std::size_t i = 0; i < out_a.size(); ++i)
            CHECK(out_a.data()[i] == doctest::Approx(out_b.data()[i]).epsilon(1e-12));
    }
    SUBCASE("no sub-events is a contract error") {
        CHECK_THROWS_AS(refine(f, {}, params), ContractError);
    }
}

TEST_CASE("calibrate identity and temporal bias") {
    Rng rng(8);
    const int d = 4;  // d_p == d_v so the value projection can be identity

    SUBCASE("global-only graph with zero params returns features") {
        EventGraph g;
        g.global_node_id = 0;
        g.nodes = {{0, 1, {0.0, 8.0}, basis(d, 0)}};
        Tensor f = random_tensor({3, d}, rng);
        CalibParams params{Tensor::zeros({d, d}), Tensor::zeros({d, d}), Tensor::zeros({d, d}),
                           Tensor::zeros({d, d}), Tensor::zeros({d, d}), Tensor::zeros({d, d}),
                           1.0, 1};
        Tensor out = calibrate(f, g, {{0.0, 2.0}, {2.0, 5.0}, {5.0, 8.0}}, params);
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == f.data()[i]);
    }

    SUBCASE("a node 100 s away is attended with weight below 1e-2") {
        const EventGraph g = two_node_graph(d);
        Tensor f = Tensor::zeros({1, d});
        Tensor identity = Tensor::zeros({d, d});
        for (int i = 0; i < d; ++i) identity.mutable_data()[i * d + i] = 1.0;
        // Zero queries/keys make the raw logits equal; zero node updates keep
        // the node embeddings at their basis vectors, so the output row reads
        // out the attention weights directly.
        CalibParams params{Tensor::zeros({d, d}), Tensor::zeros({d, d}), Tensor::zeros({d, d}),
                           Tensor::zeros({d, d}), Tensor::zeros({d, d}), identity, 1.0, 1};
        Tensor out = calibrate(f, g, {{0.0, 1.0}}, params);
        const double weight_near = out.at(0, 0);
        const double weight_far = out.at(0, 1);
        CHECK(weight_near > 0.99);
        CHECK(weight_far < 1e-2);
        CHECK(weight_near + weight_far == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("cyclic graph is rejected") {
        // global BEFORE sub plus sub PART_OF global closes a directed cycle
        // while every per-edge constraint still holds.
        EventGraph g;
        g.global_node_id = 0;
        g.nodes = {{0, 1, {0.0, 1.0}, basis(d, 0)}, {1, 2, {2.0, 3.0}, basis(d, 1)}};
        g.edges = {{0, 1, Relation::Before}, {1, 0, Relation::PartOf}};
        Tensor f = random_tensor({2, d}, rng);
        CalibParams params{Tensor::zeros({d, d}), Tensor::zeros({d, d}), Tensor::zeros({d, d}),
                           Tensor::zeros({d, d}), Tensor::zeros({d, d}), Tensor::zeros({d, d}),
                           1.0, 1};
        CHECK_THROWS_AS(calibrate(f, g, {{0.0, 1.5}, {1.5, 3.0}}, params), ContractError);
    }
}

TEST_CASE("graph attention round masks non-neighbours") {
    Rng rng(19);
    const int d_p = 3;
    // Two nodes without edges: each update may only read its own embedding.
    EventGraph g;
    g.global_node_id = 0;
    g.nodes = {{0, 1, {0.0, 2.0}, basis(d_p, 0)}, {1, 2, {3.0, 4.0}, basis(d_p, 1)}};

    CalibParams params{random_tensor({d_p, d_p}, rng), random_tensor({d_p, d_p}, rng),
                       random_tensor({d_p, d_p}, rng), Tensor::zeros({d_p, d_p}),
                       Tensor::zeros({d_p, d_p}), Tensor::zeros({d_p, d_p}), 1.0, 1};

    Tensor nodes_a = Tensor::from_data({2, d_p}, {1, 0, 0, 0, 1, 0});
    Tensor out_a = graph_attention_round(nodes_a, g, params);
    // Change node 1's embedding; node 0's update must not move.
    Tensor nodes_b = Tensor::from_data({2, d_p}, {1, 0, 0, 0.3, -0.7, 0.2});
    Tensor out_b = graph_attention_round(nodes_b, g, params);
    for (int j = 0; j < d_p; ++j) CHECK(out_a.at(0, j) == out_b.at(0, j));
}

TEST_CASE("calibrate is invariant to a uniform time shift") {
    Rng rng(77);
    const int l = 3, d_v = 4, d_p = 3;
    EventScript script;
    script.video_id = "s";
    script.video_duration_sec = 12.0;
    script.global_label = 2;
    script.events = {{2, 1.0, 4.0}, {1, 6.0, 9.0}};
    const PromptBundle bundle = build_bundle(script, {4.0, 2.0}, d_p, 3, 3);

    Tensor f = random_tensor({l, d_v}, rng);
    CalibParams params{random_tensor({d_p, d_p}, rng), random_tensor({d_p, d_p}, rng),
                       random_tensor({d_p, d_p}, rng), random_tensor({d_p, d_v}, rng),
                       random_tensor({d_p, d_p}, rng), random_tensor({d_v, d_p}, rng), 1.0, 1};
    std::vector<Span> spans{{0.0, 4.0}, {4.0, 8.0}, {8.0, 12.0}};

    Tensor base = calibrate(f, bundle.graph, spans, params);

    const double shift = 37.5;
    EventGraph shifted_graph = bundle.graph;
    for (auto& n : shifted_graph.nodes) {
        n.anchor.start_sec += shift;
        n.anchor.end_sec += shift;
    }
    std::vector<Span> shifted_spans = spans;
    for (auto& s : shifted_spans) {
        s.start_sec += shift;
        s.end_sec += shift;
    }
    Tensor moved = calibrate(f, shifted_graph, shifted_spans, params);
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(base.data()[i] == doctest::Approx(moved.data()[i]).epsilon(1e-9));
}

TEST_CASE("full guidance chain gradient check") {
    Rng rng(55);
    const int l = 3, d_v = 4, d_p = 3;
    EventScript script;
    script.video_id = "g";
    script.video_duration_sec = 9.0;
    script.global_label = 1;
    script.events = {{1, 1.0, 4.0}, {2, 5.0, 8.0}};
    const PromptBundle bundle = build_bundle(script, {3.0, 1.5}, d_p, 13, 3);
    std::vector<Span> spans{{0.0, 3.0}, {3.0, 6.0}, {6.0, 9.0}};

    Tensor f = random_tensor({l, d_v}, rng);
    GateParams gate{random_tensor({d_v, d_v + d_p}, rng), random_tensor({d_v}, rng),
                    random_tensor({d_v, d_p}, rng)};
    CrossAttnParams cross{random_tensor({d_p, d_v}, rng), random_tensor({d_p, d_p}, rng),
                          random_tensor({d_v, d_p}, rng)};
    CalibParams calib{random_tensor({d_p, d_p}, rng), random_tensor({d_p, d_p}, rng),
                      random_tensor({d_p, d_p}, rng), random_tensor({d_p, d_v}, rng),
                      random_tensor({d_p, d_p}, rng), random_tensor({d_v, d_p}, rng), 1.0, 1};
    Tensor coeffs = random_tensor({l, d_v}, rng);

    std::vector<Tensor> subs;
    for (const auto& s : bundle.subs) subs.push_back(s.embedding);

    const double err = grad_check(
        [&](const std::vector<Tensor>&) {
            Tensor fused = gate_fuse(f, bundle.p_global, gate);
            Tensor refined = refine(fused, subs, cross);
            Tensor calibrated = calibrate(refined, bundle.graph, spans, calib);
            return sum_all(mul(calibrated, coeffs));
        },
        {f, gate.w_g, gate.b_g, gate.w_p, cross.w_q, cross.w_k, cross.w_v, calib.node_wq,
         calib.node_wv, calib.token_wq, calib.token_wv},
        1e-5);
    CHECK(err < 1e-4);
}
